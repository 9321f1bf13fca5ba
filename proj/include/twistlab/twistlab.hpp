#pragma once

// Umbrella header.

#include "twistlab/clifford.hpp"
#include "twistlab/complete_intersections.hpp"
#include "twistlab/error.hpp"
#include "twistlab/linalg_paths.hpp"
#include "twistlab/local_flows.hpp"
#include "twistlab/matrix_ops.hpp"
#include "twistlab/pipeline.hpp"
#include "twistlab/polynomial.hpp"
#include "twistlab/projective.hpp"
#include "twistlab/quaternion.hpp"
#include "twistlab/rational.hpp"
#include "twistlab/rng.hpp"
#include "twistlab/spin_lift.hpp"

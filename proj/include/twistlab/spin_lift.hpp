#pragma once

#include <string>
#include <vector>

#include "twistlab/clifford.hpp"
#include "twistlab/error.hpp"
#include "twistlab/linalg_paths.hpp"
#include "twistlab/matrix_ops.hpp"
#include "twistlab/quaternion.hpp"

namespace twistlab {

/// Sampled loop in SO(n) on [0,1]: closed, special orthogonal within 1e-9,
/// consecutive steps small enough for incremental lifting.
struct SOLoop {
  int n = 0;
  std::vector<double> times;
  std::vector<Matrix> values;
};

inline void validate_loop(const SOLoop& loop) {
  if (loop.values.size() < 2) throw Error(ErrorCode::NotClosed, "loop needs at least 2 samples");
  const int n = loop.n;
  Matrix eye = Matrix::Identity(n, n);
  for (const auto& r : loop.values) {
    if (max_abs(r.transpose() * r - eye) > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9) {
      throw Error(ErrorCode::NotUnit, "loop sample is not special orthogonal within 1e-9");
    }
  }
  if ((loop.values.front() - loop.values.back()).norm() > 1e-9) {
    throw Error(ErrorCode::NotClosed, "loop endpoints differ by more than 1e-9");
  }
  for (std::size_t m = 0; m + 1 < loop.values.size(); ++m) {
    if ((loop.values[m + 1] - loop.values[m]).norm() > 0.5) {
      throw Error(ErrorCode::StepTooLarge, "consecutive loop samples differ by more than 0.5");
    }
  }
}

struct GeneratorLoops {
  SampledPath path_k;  // rot_k + I_{n-3}
  SampledPath path_i;  // rot_i + I_{n-3}
  SOLoop commutator;   // pointwise commutator loop
};

/// The plane-rotation generator paths and their pointwise commutator loop,
/// the standard representative of the nontrivial class when lifted.
inline GeneratorLoops generator_loops(int n, int grid) {
  if (n < 3) throw Error(ErrorCode::DimensionTooSmall, "generator loops require n >= 3");
  GeneratorLoops out;
  out.path_k = sample_path([n](double t) { return rot_k(t, n); }, 0.0, 1.0, grid);
  out.path_i = sample_path([n](double t) { return rot_i(t, n); }, 0.0, 1.0, grid);
  out.commutator.n = n;
  out.commutator.times = out.path_k.times;
  for (int m = 0; m <= grid; ++m) {
    const Matrix& rk = out.path_k.values[m];
    const Matrix& ri = out.path_i.values[m];
    out.commutator.values.push_back(rk * ri * rk.transpose() * ri.transpose());
  }
  return out;
}

/// Lift a loop in SO(n) to the even Clifford algebra increment by
/// increment and return the sign of the endpoint scalar: -1 when the loop
/// generates the fundamental group, +1 when it is null-homotopic.
inline int lift_loop(const SOLoop& loop) {
  if (loop.n > 10) throw Error(ErrorCode::DimensionTooSmall, "lifting supports n <= 10");
  validate_loop(loop);
  const int n = loop.n;
  CliffordElement g = CliffordElement::scalar(n, 1.0);
  for (std::size_t m = 0; m + 1 < loop.values.size(); ++m) {
    Matrix step = loop.values[m + 1] * loop.values[m].partialPivLu().inverse();
    Matrix omega = so_log_small(step);
    g = spin_bivector(omega, n).exp() * g;
  }
  double s = g.scalar_part();
  if (std::abs(std::abs(s) - 1.0) > 1e-6 || g.max_nonscalar() > 1e-6) {
    throw Error(ErrorCode::NotClosed,
                "lift endpoint is not near +-1 (scalar " + std::to_string(s) +
                    ", nonscalar " + std::to_string(g.max_nonscalar()) + ")");
  }
  return s > 0.0 ? 1 : -1;
}

/// Quaternion continuation lift for n = 3; independent cross-check of the
/// Clifford route.
inline int lift_loop_quaternion(const SOLoop& loop) {
  if (loop.n != 3) throw Error(ErrorCode::DimensionTooSmall, "quaternion lift requires n = 3");
  validate_loop(loop);
  Quaternion q = Quaternion::one();
  for (std::size_t m = 0; m + 1 < loop.values.size(); ++m) {
    Matrix step = loop.values[m + 1] * loop.values[m].partialPivLu().inverse();
    Matrix omega = so_log_small(step);
    Quaternion dq =
        quaternion_exp_imaginary(0.5 * omega(2, 1), 0.5 * omega(0, 2), 0.5 * omega(1, 0));
    q = dq * q;
  }
  if (std::abs(std::abs(q.w) - 1.0) > 1e-6 ||
      std::abs(q.x) + std::abs(q.y) + std::abs(q.z) > 1e-6) {
    throw Error(ErrorCode::NotClosed, "quaternion lift endpoint is not near +-1");
  }
  return q.w > 0.0 ? 1 : -1;
}

struct SpinObstruction {
  int nu = 0;
  int lift_sign = 1;
};

/// Reduction of the mapping-torus spin obstruction of a commuting pair to
/// the generator commutator loop: lift sign is -1 exactly when the
/// negative parity is odd.
inline SpinObstruction spin_obstruction_of_pair(const CommutingPair& pair, int grid = 2048) {
  if (pair.n() < 3) throw Error(ErrorCode::DimensionTooSmall, "requires n >= 3");
  SpinObstruction out;
  out.nu = negative_parity(pair);
  if (out.nu == 0) {
    SOLoop constant;
    constant.n = pair.n();
    constant.times = {0.0, 1.0};
    constant.values = {Matrix::Identity(pair.n(), pair.n()),
                       Matrix::Identity(pair.n(), pair.n())};
    out.lift_sign = lift_loop(constant);
  } else {
    out.lift_sign = lift_loop(generator_loops(pair.n(), grid).commutator);
  }
  return out;
}

/// Loop utilities used by the lifting property tests.
inline SOLoop concatenate_loops(const SOLoop& first, const SOLoop& second) {
  if (first.n != second.n) throw Error(ErrorCode::GridMismatch, "loop dimensions differ");
  SOLoop out;
  out.n = first.n;
  for (std::size_t m = 0; m < first.values.size(); ++m) {
    out.times.push_back(0.5 * first.times[m]);
    out.values.push_back(first.values[m]);
  }
  for (std::size_t m = 1; m < second.values.size(); ++m) {
    out.times.push_back(0.5 + 0.5 * second.times[m]);
    out.values.push_back(second.values[m] * first.values.back() *
                         second.values.front().partialPivLu().inverse());
  }
  return out;
}

inline SOLoop reverse_loop(const SOLoop& loop) {
  SOLoop out;
  out.n = loop.n;
  const std::size_t count = loop.values.size();
  for (std::size_t m = 0; m < count; ++m) {
    out.times.push_back(1.0 - loop.times[count - 1 - m]);
    out.values.push_back(loop.values[count - 1 - m]);
  }
  return out;
}

inline SOLoop conjugate_loop(const SOLoop& loop, const Matrix& r) {
  SOLoop out;
  out.n = loop.n;
  out.times = loop.times;
  for (const auto& v : loop.values) out.values.push_back(r * v * r.transpose());
  return out;
}

}  // namespace twistlab

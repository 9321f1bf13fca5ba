#pragma once

#include <utility>
#include <vector>

#include "twistlab/matrix_ops.hpp"
#include "twistlab/polynomial.hpp"
#include "twistlab/rng.hpp"

namespace twistlab {

/// Point in a product of projective spaces, one complex vector per factor,
/// normalized so the first largest-modulus entry of each factor is 1.
struct ProjectivePoint {
  std::vector<CVector> coords;

  int factor_count() const { return static_cast<int>(coords.size()); }

  void normalize() {
    for (auto& z : coords) {
      int imax = 0;
      for (int i = 1; i < z.size(); ++i) {
        if (std::abs(z[i]) > std::abs(z[imax])) imax = i;
      }
      std::complex<double> pivot = z[imax];
      if (pivot == std::complex<double>(0, 0)) {
        throw Error(ErrorCode::ConfigError, "projective factor is the zero vector");
      }
      z /= pivot;
    }
  }

  std::vector<std::complex<double>> flat() const {
    std::vector<std::complex<double>> out;
    for (const auto& z : coords)
      for (int i = 0; i < z.size(); ++i) out.push_back(z[i]);
    return out;
  }
};

inline ProjectivePoint point_from_flat(const std::vector<std::complex<double>>& flat,
                                       const std::vector<int>& factor_dims) {
  ProjectivePoint p;
  int v = 0;
  for (int d : factor_dims) {
    CVector z(d + 1);
    for (int i = 0; i <= d; ++i) z[i] = flat[v++];
    p.coords.push_back(z);
  }
  return p;
}

/// Base point ([0:...:0:1], ..., [0:...:0:1]), the shared fixed point of
/// the involutions.
inline ProjectivePoint base_point(const std::vector<int>& factor_dims) {
  ProjectivePoint p;
  for (int d : factor_dims) {
    CVector z = CVector::Zero(d + 1);
    z[d] = 1.0;
    p.coords.push_back(z);
  }
  return p;
}

/// ([1:0:...:0], [0:...:0:1], ..., [0:...:0:1]): the other distinguished
/// point, off the zero set exactly when some polynomial has a nonzero
/// pure-leading monomial.
inline ProjectivePoint first_coordinate_point(const std::vector<int>& factor_dims) {
  ProjectivePoint p = base_point(factor_dims);
  p.coords[0].setZero();
  p.coords[0][0] = 1.0;
  return p;
}

/// Unitarily invariant random point: complex Gaussian coordinates per
/// factor, then normalized.
inline ProjectivePoint random_projective_point(Rng& rng, const std::vector<int>& factor_dims) {
  ProjectivePoint p;
  for (int d : factor_dims) {
    CVector z(d + 1);
    for (int i = 0; i <= d; ++i) z[i] = rng.cgauss();
    p.coords.push_back(z);
  }
  p.normalize();
  return p;
}

/// The involution a: negate the coordinate z_{0,0}.
inline ProjectivePoint involution_a(const ProjectivePoint& z) {
  ProjectivePoint out = z;
  out.coords[0][0] = -out.coords[0][0];
  out.normalize();
  return out;
}

/// The involution c: conjugate every coordinate.
inline ProjectivePoint involution_c(const ProjectivePoint& z) {
  ProjectivePoint out = z;
  for (auto& factor : out.coords) factor = factor.conjugate();
  out.normalize();
  return out;
}

/// Both involution images at once.
inline std::pair<ProjectivePoint, ProjectivePoint> involution_maps(const ProjectivePoint& z) {
  return {involution_a(z), involution_c(z)};
}

inline double projective_distance(const ProjectivePoint& x, const ProjectivePoint& y) {
  double worst = 0.0;
  for (int f = 0; f < x.factor_count(); ++f) {
    ProjectivePoint a = x, b = y;
    a.normalize();
    b.normalize();
    worst = std::max(worst, (a.coords[f] - b.coords[f]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace twistlab

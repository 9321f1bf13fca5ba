#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "twistlab/error.hpp"

namespace twistlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Entrywise max norm, the default norm in the path contracts.
inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline double commutation_residual(const Matrix& a, const Matrix& c) {
  return max_abs(a * c - c * a);
}

/// sigma(u) = exp(-1/u) for u > 0, extended by 0; all derivatives vanish at 0.
inline double bump_sigma(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

/// Canonical smooth step: 0 on (-inf,0], 1 on [1,inf), C-infinity, s(1/2)=1/2.
inline double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  double a = bump_sigma(u), b = bump_sigma(1.0 - u);
  return a / (a + b);
}

/// Principal logarithm of a rotation near the identity, per the incremental
/// lifting scheme: the series log(I + (R - I)) followed by
/// skew-symmetrization. Requires ||R - I||_F <= 0.5.
inline Matrix so_log_small(const Matrix& r) {
  const int n = static_cast<int>(r.rows());
  Matrix e = r - Matrix::Identity(n, n);
  const double step = e.norm();
  if (step > 0.5) {
    throw Error(ErrorCode::StepTooLarge,
                "||R - I|| = " + std::to_string(step) + " exceeds 0.5");
  }
  Matrix term = e;
  Matrix log_sum = e;
  for (int m = 2; m <= 64; ++m) {
    term = term * e;
    double scale = (m % 2 == 0) ? -1.0 / m : 1.0 / m;
    log_sum += scale * term;
    if (term.norm() / m < 1e-17) break;
  }
  return 0.5 * (log_sum - log_sum.transpose());
}

/// Logarithm of a special orthogonal matrix via the real Schur form.
/// Handles rotation angle pi (paired -1 eigenvalues), which series and
/// inverse-scaling logarithms cannot.
inline Matrix orthogonal_log(const Matrix& q, double block_tol = 1e-9) {
  const int n = static_cast<int>(q.rows());
  Eigen::RealSchur<Matrix> schur(q);
  const Matrix& t = schur.matrixT();
  const Matrix& u = schur.matrixU();
  Matrix omega = Matrix::Zero(n, n);
  std::vector<int> minus_ones;
  int i = 0;
  while (i < n) {
    if (i + 1 < n && std::abs(t(i + 1, i)) > block_tol) {
      double theta = std::atan2(t(i + 1, i), t(i, i));
      Vector ui = u.col(i), uj = u.col(i + 1);
      omega += theta * (uj * ui.transpose() - ui * uj.transpose());
      i += 2;
    } else {
      if (t(i, i) < 0.0) minus_ones.push_back(i);
      i += 1;
    }
  }
  if (minus_ones.size() % 2 != 0) {
    throw Error(ErrorCode::NotUnit, "matrix is not special orthogonal (odd -1 count)");
  }
  for (std::size_t k = 0; k + 1 < minus_ones.size(); k += 2) {
    Vector ui = u.col(minus_ones[k]), uj = u.col(minus_ones[k + 1]);
    const double pi = 3.14159265358979323846264338327950288;
    omega += pi * (uj * ui.transpose() - ui * uj.transpose());
  }
  return omega;
}

struct PolarDecomposition {
  Matrix q;  // special orthogonal when det of the input is positive
  Matrix p;  // symmetric positive definite
};

inline PolarDecomposition polar_decompose(const Matrix& b) {
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix q = svd.matrixU() * svd.matrixV().transpose();
  Matrix p = svd.matrixV() * svd.singularValues().asDiagonal() * svd.matrixV().transpose();
  return {q, p};
}

/// Central finite-difference Jacobian of a map R^n -> R^n.
inline Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& f,
                                         const Vector& v, double h = 1e-5) {
  const int n = static_cast<int>(v.size());
  Matrix j(n, n);
  for (int k = 0; k < n; ++k) {
    Vector vp = v, vm = v;
    vp[k] += h;
    vm[k] -= h;
    j.col(k) = (f(vp) - f(vm)) / (2.0 * h);
  }
  return j;
}

/// Rotation by pi*t in the (1,2)-plane, extended by the identity.
inline Matrix rot_k(double t, int n) {
  const double pi = 3.14159265358979323846264338327950288;
  Matrix m = Matrix::Identity(n, n);
  m(0, 0) = std::cos(pi * t);
  m(0, 1) = -std::sin(pi * t);
  m(1, 0) = std::sin(pi * t);
  m(1, 1) = std::cos(pi * t);
  return m;
}

/// Companion path in the (2,3)-plane; at t=1 it reaches diag(1,-1,-1) + I.
inline Matrix rot_i(double t, int n) {
  const double pi = 3.14159265358979323846264338327950288;
  Matrix m = Matrix::Identity(n, n);
  m(1, 1) = std::cos(pi * t);
  m(1, 2) = std::sin(pi * t);
  m(2, 1) = -std::sin(pi * t);
  m(2, 2) = std::cos(pi * t);
  return m;
}

}  // namespace twistlab

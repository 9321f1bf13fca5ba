#pragma once

#include <cmath>

#include "twistlab/error.hpp"
#include "twistlab/matrix_ops.hpp"

namespace twistlab {

/// Quaternion w + x i + y j + z k with i^2 = j^2 = k^2 = -1, ij = k.
struct Quaternion {
  double w = 0.0, x = 0.0, y = 0.0, z = 0.0;

  Quaternion() = default;
  Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  static Quaternion one() { return {1, 0, 0, 0}; }
  static Quaternion i() { return {0, 1, 0, 0}; }
  static Quaternion j() { return {0, 0, 1, 0}; }
  static Quaternion k() { return {0, 0, 0, 1}; }

  Quaternion operator+(const Quaternion& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
  Quaternion operator-(const Quaternion& o) const { return {w - o.w, x - o.x, y - o.y, z - o.z}; }
  Quaternion operator*(double s) const { return {w * s, x * s, y * s, z * s}; }

  Quaternion operator*(const Quaternion& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }

  Quaternion conjugate() const { return {w, -x, -y, -z}; }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quaternion inverse() const {
    double n2 = w * w + x * x + y * y + z * z;
    return {w / n2, -x / n2, -y / n2, -z / n2};
  }

  bool is_unit(double tol = 1e-12) const { return std::abs(norm() - 1.0) <= tol; }
};

/// exp of a purely imaginary quaternion.
inline Quaternion quaternion_exp_imaginary(double x, double y, double z) {
  double a = std::sqrt(x * x + y * y + z * z);
  if (a == 0.0) return Quaternion::one();
  double s = std::sin(a) / a;
  return {std::cos(a), x * s, y * s, z * s};
}

/// Q_k(t) = e^{pi k t / 2} and Q_i(t) = e^{pi i t / 2}, the spinor paths
/// covering the plane-rotation paths rot_k and rot_i.
inline Quaternion spinor_path_k(double t) {
  const double pi = 3.14159265358979323846264338327950288;
  return quaternion_exp_imaginary(0, 0, pi * t / 2);
}
inline Quaternion spinor_path_i(double t) {
  const double pi = 3.14159265358979323846264338327950288;
  return quaternion_exp_imaginary(pi * t / 2, 0, 0);
}

/// Matrix of v -> q v q^{-1} on the imaginary quaternions in basis (i, j, k).
/// With this convention the spinor path Q_k(t) covers rot_k(t) exactly, and
/// quaternion_rotation(-q) == quaternion_rotation(q).
inline Matrix quaternion_rotation(const Quaternion& q) {
  if (!q.is_unit()) {
    throw Error(ErrorCode::NotUnit, "quaternion_rotation requires |q| = 1");
  }
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Matrix r(3, 3);
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

/// The commutator [Q_k(1), Q_i(1)] = k i (-k) (-i) in exact arithmetic;
/// evaluates to -1, the witness that the commutator loop is the nontrivial
/// spin class.
inline Quaternion quaternion_commutator_witness() {
  Quaternion qk = Quaternion::k(), qi = Quaternion::i();
  return qk * qi * qk.inverse() * qi.inverse();
}

}  // namespace twistlab

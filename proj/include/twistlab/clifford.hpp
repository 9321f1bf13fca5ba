#pragma once

#include <bit>
#include <cstdint>
#include <map>

#include "twistlab/error.hpp"
#include "twistlab/matrix_ops.hpp"

namespace twistlab {

/// Element of the real Clifford algebra Cl(n) with e_i^2 = -1 and
/// e_i e_j = -e_j e_i. Coefficients are indexed by blade bitmask (bit i-1
/// set means the blade contains e_i); an ordered map keeps all floating
/// point accumulation orders reproducible.
class CliffordElement {
 public:
  explicit CliffordElement(int n) : n_(n) {
    if (n < 1 || n > 10) {
      throw Error(ErrorCode::DimensionTooSmall, "Clifford dimension must be in [1,10]");
    }
  }

  static CliffordElement scalar(int n, double value) {
    CliffordElement e(n);
    if (value != 0.0) e.coef_[0u] = value;
    return e;
  }

  static CliffordElement generator(int n, int i) {  // e_i, 1-based index
    CliffordElement e(n);
    e.coef_[1u << (i - 1)] = 1.0;
    return e;
  }

  int dimension() const { return n_; }
  const std::map<std::uint32_t, double>& coefficients() const { return coef_; }

  double coefficient(std::uint32_t mask) const {
    auto it = coef_.find(mask);
    return it == coef_.end() ? 0.0 : it->second;
  }

  void set(std::uint32_t mask, double value) {
    if (value == 0.0)
      coef_.erase(mask);
    else
      coef_[mask] = value;
  }

  double scalar_part() const { return coefficient(0u); }

  double max_nonscalar() const {
    double m = 0.0;
    for (const auto& [mask, v] : coef_)
      if (mask != 0u) m = std::max(m, std::abs(v));
    return m;
  }

  /// Sum of absolute coefficients; submultiplicative, used for exp scaling.
  double norm1() const {
    double s = 0.0;
    for (const auto& [mask, v] : coef_) s += std::abs(v);
    return s;
  }

  CliffordElement operator+(const CliffordElement& o) const {
    CliffordElement r = *this;
    for (const auto& [mask, v] : o.coef_) {
      double nv = r.coefficient(mask) + v;
      r.set(mask, nv);
    }
    return r;
  }

  CliffordElement operator*(double s) const {
    CliffordElement r(n_);
    if (s == 0.0) return r;
    for (const auto& [mask, v] : coef_) r.coef_[mask] = v * s;
    return r;
  }

  CliffordElement operator*(const CliffordElement& o) const {
    CliffordElement r(n_);
    for (const auto& [ma, va] : coef_) {
      for (const auto& [mb, vb] : o.coef_) {
        int sign = blade_product_sign(ma, mb);
        std::uint32_t mask = ma ^ mb;
        double add = sign * va * vb;
        auto it = r.coef_.find(mask);
        if (it == r.coef_.end()) {
          if (add != 0.0) r.coef_[mask] = add;
        } else {
          it->second += add;
        }
      }
    }
    r.prune();
    return r;
  }

  /// exp by scaling and squaring over the power series, terms cut at 1e-14.
  CliffordElement exp() const {
    int squarings = 0;
    double scale = norm1();
    while (scale > 0.5) {
      scale *= 0.5;
      ++squarings;
    }
    CliffordElement x = *this * std::ldexp(1.0, -squarings);
    CliffordElement acc = scalar(n_, 1.0);
    CliffordElement term = scalar(n_, 1.0);
    for (int m = 1; m <= 40; ++m) {
      term = term * x * (1.0 / m);
      acc = acc + term;
      if (term.norm1() < 1e-14) break;
    }
    for (int s = 0; s < squarings; ++s) acc = acc * acc;
    return acc;
  }

 private:
  void prune() {
    for (auto it = coef_.begin(); it != coef_.end();) {
      if (std::abs(it->second) < 1e-300)
        it = coef_.erase(it);
      else
        ++it;
    }
  }

  /// Sign of e_A * e_B: transposition count to interleave, then a factor
  /// -1 per shared index (the e_i^2 = -1 metric).
  static int blade_product_sign(std::uint32_t a, std::uint32_t b) {
    int swaps = 0;
    std::uint32_t t = a >> 1;
    while (t != 0u) {
      swaps += std::popcount(t & b);
      t >>= 1;
    }
    int common = std::popcount(a & b);
    return ((swaps + common) % 2 == 0) ? 1 : -1;
  }

  int n_;
  std::map<std::uint32_t, double> coef_;
};

/// Bivector (1/2) sum_{i<j} omega_{ji} e_i e_j associated with a skew
/// matrix; its Clifford exp covers exp(omega) under x -> g x g^{-1}, the
/// same convention under which the quaternion model covers rotations.
inline CliffordElement spin_bivector(const Matrix& omega, int n) {
  CliffordElement b(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double v = 0.5 * omega(j, i);
      if (v != 0.0) {
        std::uint32_t mask = (1u << i) | (1u << j);
        b.set(mask, v);
      }
    }
  }
  return b;
}

}  // namespace twistlab

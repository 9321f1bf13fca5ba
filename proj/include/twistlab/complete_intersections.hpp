#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "twistlab/matrix_ops.hpp"
#include "twistlab/polynomial.hpp"
#include "twistlab/projective.hpp"
#include "twistlab/rng.hpp"

namespace twistlab {

// ---------------------------------------------------------------------------
// symmetry conditions
// ---------------------------------------------------------------------------

struct SymmetryConditions {
  bool real_coefficients = true;  // rationals, retained for future complex input
  bool even_leading_power = true;       // every monomial: even power of z_{0,0}
  bool positive_other_coordinate = true;  // some coordinate other than the
                                          // per-factor last appears
  bool all() const {
    return real_coefficients && even_leading_power && positive_other_coordinate;
  }
};

struct SymmetryReport {
  std::vector<SymmetryConditions> per_poly;
  bool all() const {
    for (const auto& c : per_poly)
      if (!c.all()) return false;
    return true;
  }
};

inline SymmetryReport symmetry_conditions(const PolySystem& sys) {
  SymmetryReport report;
  for (const auto& p : sys.polys) {
    SymmetryConditions cond;
    for (const auto& [e, c] : p.terms) {
      if (e[p.var_index(0, 0)] % 2 != 0) cond.even_leading_power = false;
      bool has_other = false;
      int v = 0;
      for (int f = 0; f < p.factor_count(); ++f) {
        for (int i = 0; i <= p.factor_dims[f]; ++i, ++v) {
          if (i != p.factor_dims[f] && e[v] > 0) has_other = true;
        }
      }
      if (!has_other) cond.positive_other_coordinate = false;
    }
    report.per_poly.push_back(cond);
  }
  return report;
}

// ---------------------------------------------------------------------------
// witness systems
// ---------------------------------------------------------------------------

/// The explicit witness system: q_i = z_i for degree 1,
/// z_0^{d-1} z_i + z_0^{d-1} z_n + z_i z_n^{d-1} for odd degree > 1,
/// z_0^d + z_i z_n^{d-1} for even degree.
inline PolySystem witness_qA(const std::vector<int>& degrees, int n) {
  const int m = static_cast<int>(degrees.size());
  if (m < 1 || m >= n) throw Error(ErrorCode::BadDegrees, "need 1 <= m < n");
  for (int d : degrees)
    if (d < 1) throw Error(ErrorCode::BadDegrees, "degrees must be positive");

  std::vector<MultiHomogeneousPolynomial> polys;
  for (int i = 1; i <= m; ++i) {
    int d = degrees[i - 1];
    MultiHomogeneousPolynomial q;
    q.factor_dims = {n};
    auto mono = [&](std::initializer_list<std::pair<int, unsigned>> powers) {
      Exponents e(n + 1, 0u);
      for (auto [var, p] : powers) e[var] += p;
      return e;
    };
    if (d == 1) {
      q.add_term(mono({{i, 1}}), 1);
    } else if (d % 2 == 1) {
      q.add_term(mono({{0, static_cast<unsigned>(d - 1)}, {i, 1}}), 1);
      q.add_term(mono({{0, static_cast<unsigned>(d - 1)}, {n, 1}}), 1);
      q.add_term(mono({{i, 1}, {n, static_cast<unsigned>(d - 1)}}), 1);
    } else {
      q.add_term(mono({{0, static_cast<unsigned>(d)}}), 1);
      q.add_term(mono({{i, 1}, {n, static_cast<unsigned>(d - 1)}}), 1);
    }
    q.finalize();
    polys.push_back(std::move(q));
  }
  return make_system(std::move(polys));
}

namespace detail {

/// Exact evaluation of a single-factor polynomial on the axis locus
/// {[a0 : 0 : ... : 0 : an]}: returns coefficients r_k of a0^k an^{d-k}.
inline std::vector<Rational> restrict_to_axis(const MultiHomogeneousPolynomial& p, int n) {
  int d = p.multidegree[0];
  std::vector<Rational> r(d + 1, Rational(0));
  for (const auto& [e, c] : p.terms) {
    bool on_axis = true;
    for (int v = 1; v < n; ++v)
      if (e[v] > 0) on_axis = false;
    if (on_axis) r[e[0]] += c;
  }
  return r;
}

inline std::vector<GaussianRational> axis_point(const Rational& a0, const Rational& an, int n) {
  std::vector<GaussianRational> z(n + 1, GaussianRational(Rational(0)));
  z[0] = GaussianRational(a0);
  z[n] = GaussianRational(an);
  return z;
}

}  // namespace detail

/// Exact verification of the witness identity on a single-factor system:
/// at every axis point where q_i vanishes, the row of partials with
/// respect to z_1..z_m is the i-th standard basis row, and the m x m
/// block determinant is 1 at common zeros. A false return is a finding.
inline bool witness_rows_check(const PolySystem& sys) {
  if (sys.factor_dims().size() != 1)
    throw Error(ErrorCode::BadShape, "witness check is single-factor");
  const int n = sys.factor_dims()[0];
  const int m = sys.m();

  // candidate axis zeros per polynomial (plus generic samples when the
  // restriction vanishes identically)
  auto zeros_of = [&](const MultiHomogeneousPolynomial& p) {
    std::vector<std::pair<Rational, Rational>> pts;
    auto r = detail::restrict_to_axis(p, n);
    bool all_zero = true;
    for (const auto& c : r)
      if (c != 0) all_zero = false;
    if (all_zero) {
      pts = {{1, 0}, {0, 1}, {1, 1}, {2, 3}};
      return pts;
    }
    int low = 0;
    while (r[low] == 0) ++low;            // power of an dividing the rest
    int high = static_cast<int>(r.size()) - 1;
    while (r[high] == 0) --high;          // power of a0
    if (low > 0) pts.push_back({0, 1});   // a0 divides: [0 : ... : 1] is a zero
    if (high < static_cast<int>(r.size()) - 1) pts.push_back({1, 0});  // an divides
    if (high - low > 0) {
      throw Error(ErrorCode::BadDegrees,
                  "axis restriction has roots that cannot be enumerated exactly");
    }
    return pts;
  };

  bool ok = true;
  std::vector<std::pair<Rational, Rational>> common = {{0, 1}, {1, 0}, {1, 1}, {2, 3}};
  for (int i = 1; i <= m; ++i) {
    const auto& q = sys.polys[i - 1];
    for (const auto& [a0, an] : zeros_of(q)) {
      auto z = detail::axis_point(a0, an, n);
      if (!q.evaluate<GaussianRational>(z).is_zero()) continue;
      for (int j = 1; j <= m; ++j) {
        GaussianRational dq = q.partial(j).evaluate<GaussianRational>(z);
        GaussianRational expect(Rational(j == i ? 1 : 0));
        if (!(dq == expect)) ok = false;
      }
    }
    // keep only common zeros of the whole system
    std::vector<std::pair<Rational, Rational>> still;
    for (const auto& pt : common) {
      auto z = detail::axis_point(pt.first, pt.second, n);
      if (q.evaluate<GaussianRational>(z).is_zero()) still.push_back(pt);
    }
    common = still;
  }

  // the displayed determinant identity at common zeros
  for (const auto& pt : common) {
    auto z = detail::axis_point(pt.first, pt.second, n);
    // exact determinant of the m x m block via fraction-free elimination
    std::vector<std::vector<GaussianRational>> block(m, std::vector<GaussianRational>(m));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        block[i][j] = sys.polys[i].partial(j + 1).evaluate<GaussianRational>(z);
    // Laplace expansion is fine at m <= 3
    std::function<GaussianRational(std::vector<int>, std::vector<int>)> det =
        [&](std::vector<int> rows, std::vector<int> cols) -> GaussianRational {
      if (rows.size() == 1) return block[rows[0]][cols[0]];
      GaussianRational acc;
      for (std::size_t k = 0; k < cols.size(); ++k) {
        std::vector<int> sub_rows(rows.begin() + 1, rows.end());
        std::vector<int> sub_cols;
        for (std::size_t l = 0; l < cols.size(); ++l)
          if (l != k) sub_cols.push_back(cols[l]);
        GaussianRational term = block[rows[0]][cols[k]] * det(sub_rows, sub_cols);
        acc = (k % 2 == 0) ? acc + term : acc - term;
      }
      return acc;
    };
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    if (!(det(idx, idx) == GaussianRational(Rational(1)))) ok = false;
  }
  return ok;
}

inline bool kronecker_witness_check(const std::vector<int>& degrees, int n) {
  return witness_rows_check(witness_qA(degrees, n));
}

// ---------------------------------------------------------------------------
// Jacobians and smoothness probing
// ---------------------------------------------------------------------------

struct JacobianMinors {
  std::vector<std::complex<double>> values;      // q(z)
  CMatrix jacobian;                              // m x (total coordinates)
  std::vector<std::complex<double>> minors;      // all m x m minor determinants
  std::vector<std::vector<int>> minor_columns;
};

inline JacobianMinors jacobian_minors(const PolySystem& sys, const ProjectivePoint& z) {
  JacobianMinors out;
  const int m = sys.m();
  const int nv = sys.total_vars();
  auto flat = z.flat();
  out.jacobian = CMatrix(m, nv);
  for (int i = 0; i < m; ++i) {
    out.values.push_back(sys.polys[i].evaluate<std::complex<double>>(flat));
    for (int v = 0; v < nv; ++v) {
      out.jacobian(i, v) = sys.polys[i].partial(v).evaluate<std::complex<double>>(flat);
    }
  }
  // enumerate column subsets of size m
  std::vector<int> cols(m);
  std::function<void(int, int)> walk = [&](int start, int depth) {
    if (depth == m) {
      CMatrix sub(m, m);
      for (int j = 0; j < m; ++j) sub.col(j) = out.jacobian.col(cols[j]);
      out.minors.push_back(sub.determinant());
      out.minor_columns.push_back(cols);
      return;
    }
    for (int c = start; c < nv; ++c) {
      cols[depth] = c;
      walk(c + 1, depth + 1);
    }
  };
  walk(0, 0);
  return out;
}

struct SpecialPointResult {
  std::string name;
  bool on_zero_set = false;
  bool singular = false;  // on the set with all minors vanishing
  double max_abs_value = 0.0;
  double max_abs_minor = 0.0;
};

struct SmoothnessFailure {
  int sample_index = 0;
  std::vector<std::complex<double>> point;
  double residual = 0.0;
  double sigma_min = 0.0;
};

struct SmoothnessReport {
  int samples_requested = 0;
  int samples_converged = 0;
  double min_singular_value = 0.0;
  double sigma_threshold = 0.0;
  std::vector<SmoothnessFailure> failures;
  std::vector<SpecialPointResult> special_points;
  bool branch_point_off_zero_set = false;  // some poly has a nonzero
                                           // pure-leading monomial
  // converged samples, kept in memory for property checks; not serialized
  std::vector<std::vector<std::complex<double>>> converged_points;
  std::vector<double> converged_sigmas;
};

namespace detail {

/// Smallest singular value of the chart Jacobian at a normalized point on
/// the zero set. The chart drops the per-factor entry of modulus rank
/// `pivot_rank` (0 = largest, 1 = second largest); different choices agree
/// up to the chart transition scaling.
inline double chart_sigma_min(const PolySystem& sys,
                              const std::vector<std::complex<double>>& flat, int pivot_rank = 0) {
  const int m = sys.m();
  std::vector<int> chart_cols;
  int v0 = 0;
  for (int f = 0; f < static_cast<int>(sys.factor_dims().size()); ++f) {
    int len = sys.factor_dims()[f] + 1;
    std::vector<int> order(len);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
      return std::abs(flat[v0 + x]) > std::abs(flat[v0 + y]);
    });
    int pivot = order[std::min(pivot_rank, len - 1)];
    for (int i = 0; i < len; ++i)
      if (i != pivot) chart_cols.push_back(v0 + i);
    v0 += len;
  }
  CMatrix chart_jac(m, static_cast<int>(chart_cols.size()));
  for (int i = 0; i < m; ++i)
    for (std::size_t j = 0; j < chart_cols.size(); ++j)
      chart_jac(i, static_cast<int>(j)) =
          sys.polys[i].partial(chart_cols[j]).evaluate<std::complex<double>>(flat);
  Eigen::JacobiSVD<CMatrix> svd(chart_jac);
  return svd.singularValues().minCoeff();
}

struct ProjectedSample {
  bool converged = false;
  std::vector<std::complex<double>> point;
  double residual = 0.0;
  double sigma_min = 0.0;
};

inline ProjectedSample project_sample(const PolySystem& sys, Rng rng) {
  ProjectedSample out;
  ProjectivePoint z = random_projective_point(rng, sys.factor_dims());
  const int m = sys.m();
  const int nv = sys.total_vars();

  auto residual_of = [&](const std::vector<std::complex<double>>& flat) {
    double r = 0.0;
    for (int i = 0; i < m; ++i)
      r = std::max(r, std::abs(sys.polys[i].evaluate<std::complex<double>>(flat)));
    return r;
  };

  auto flat = z.flat();
  double res = residual_of(flat);
  for (int iter = 0; iter < 50 && res > 1e-12; ++iter) {
    CVector q(m);
    CMatrix jac(m, nv);
    for (int i = 0; i < m; ++i) {
      q[i] = sys.polys[i].evaluate<std::complex<double>>(flat);
      for (int v = 0; v < nv; ++v)
        jac(i, v) = sys.polys[i].partial(v).evaluate<std::complex<double>>(flat);
    }
    Eigen::JacobiSVD<CMatrix> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    CVector delta = svd.solve(q);
    double scale = 1.0;
    for (int halving = 0; halving < 8; ++halving) {
      std::vector<std::complex<double>> cand = flat;
      for (int v = 0; v < nv; ++v) cand[v] -= scale * delta[v];
      double cand_res = residual_of(cand);
      if (cand_res <= res || halving == 7) {
        flat = cand;
        res = cand_res;
        break;
      }
      scale *= 0.5;  // damping when the residual increases
    }
  }
  if (res > 1e-12) return out;

  ProjectivePoint converged = point_from_flat(flat, sys.factor_dims());
  converged.normalize();
  flat = converged.flat();

  out.converged = true;
  out.point = flat;
  out.residual = res;
  out.sigma_min = chart_sigma_min(sys, flat);
  return out;
}

inline Exponents pure_leading_exponent(const MultiHomogeneousPolynomial& p) {
  Exponents e(p.total_vars(), 0u);
  e[p.var_index(0, 0)] = static_cast<unsigned>(p.multidegree[0]);
  for (int f = 1; f < p.factor_count(); ++f) {
    e[p.var_index(f, p.factor_dims[f])] = static_cast<unsigned>(p.multidegree[f]);
  }
  return e;
}

}  // namespace detail

/// Monte Carlo smoothness probe: random projective points are
/// Gauss-Newton-projected onto the zero set; the minimal singular value of
/// the chart Jacobian is recorded per convergent sample. Exact evaluations
/// at the two distinguished points are attached. Reproducible for a fixed
/// seed regardless of the thread count.
inline SmoothnessReport smoothness_scan(const PolySystem& sys, int num_samples,
                                        std::uint64_t seed, double sigma_threshold = 1e-6,
                                        int threads = 1) {
  SmoothnessReport report;
  report.samples_requested = num_samples;
  report.sigma_threshold = sigma_threshold;

  std::vector<detail::ProjectedSample> samples(num_samples);
  auto worker = [&](int begin, int end) {
    for (int idx = begin; idx < end; ++idx) {
      samples[idx] = detail::project_sample(sys, Rng::stream(seed, idx));
    }
  };
  if (threads <= 1 || num_samples < 2) {
    worker(0, num_samples);
  } else {
    std::vector<std::thread> pool;
    int chunk = (num_samples + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      int begin = t * chunk, end = std::min(num_samples, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  double min_sigma = std::numeric_limits<double>::infinity();
  for (int idx = 0; idx < num_samples; ++idx) {
    const auto& s = samples[idx];
    if (!s.converged) continue;
    ++report.samples_converged;
    min_sigma = std::min(min_sigma, s.sigma_min);
    report.converged_points.push_back(s.point);
    report.converged_sigmas.push_back(s.sigma_min);
    if (s.sigma_min < sigma_threshold) {
      report.failures.push_back({idx, s.point, s.residual, s.sigma_min});
    }
  }
  if (report.samples_converged == 0) {
    throw Error(ErrorCode::NoConvergentSamples,
                "no sample converged onto the zero set; it may be empty at this scale");
  }
  report.min_singular_value = min_sigma;

  for (auto [name, point] :
       {std::pair<std::string, ProjectivePoint>{"base", base_point(sys.factor_dims())},
        {"first_coordinate", first_coordinate_point(sys.factor_dims())}}) {
    auto jm = jacobian_minors(sys, point);
    SpecialPointResult r;
    r.name = name;
    for (const auto& v : jm.values) r.max_abs_value = std::max(r.max_abs_value, std::abs(v));
    for (const auto& v : jm.minors) r.max_abs_minor = std::max(r.max_abs_minor, std::abs(v));
    r.on_zero_set = r.max_abs_value <= 1e-10;
    r.singular = r.on_zero_set && r.max_abs_minor <= 1e-10;
    report.special_points.push_back(r);
  }
  for (const auto& p : sys.polys) {
    auto it = p.terms.find(detail::pure_leading_exponent(p));
    if (it != p.terms.end() && it->second != 0) report.branch_point_off_zero_set = true;
  }
  return report;
}

// ---------------------------------------------------------------------------
// involution invariance
// ---------------------------------------------------------------------------

/// Coefficient-level identities p(a(z)) = p(z) and p(c(z)) = conj(p(z)),
/// cross-checked on exact random Gaussian-rational points.
inline bool invariance_check(const PolySystem& sys, int num_samples = 32,
                             std::uint64_t seed = 0) {
  for (const auto& p : sys.polys) {
    // p composed with a: each coefficient picks up (-1)^{e_00}
    MultiHomogeneousPolynomial pa;
    pa.factor_dims = p.factor_dims;
    for (const auto& [e, c] : p.terms) {
      pa.add_term(e, e[p.var_index(0, 0)] % 2 == 0 ? c : -c);
    }
    if (!(pa == p)) return false;
    // p composed with c has conjugated coefficients; rationals are real
  }

  // sampled cross-validation in exact arithmetic
  for (int s = 0; s < num_samples; ++s) {
    Rng rng = Rng::stream(seed, 7000 + s);
    for (const auto& p : sys.polys) {
      std::vector<GaussianRational> z;
      for (int v = 0; v < sys.total_vars(); ++v) {
        z.push_back({Rational(rng.uniform_int(-9, 9), 1 + rng.uniform_int(0, 8)),
                     Rational(rng.uniform_int(-9, 9), 1 + rng.uniform_int(0, 8))});
      }
      std::vector<GaussianRational> za = z;
      za[p.var_index(0, 0)] = -za[p.var_index(0, 0)];
      std::vector<GaussianRational> zc;
      for (const auto& w : z) zc.push_back(w.conj());

      GaussianRational v = p.evaluate<GaussianRational>(z);
      if (!(p.evaluate<GaussianRational>(za) == v)) return false;
      if (!(p.evaluate<GaussianRational>(zc) == v.conj())) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// implicit-function-theorem charts
// ---------------------------------------------------------------------------

/// Chart data at the base point: affine coordinates drop the per-factor
/// last variable; sigma lists free slots first, then the m dependent
/// slots, with sigma(0) = 0 always.
struct Chart {
  PolySystem sys;
  std::vector<int> affine_vars;  // coordinate indices, length n
  std::vector<int> sigma;        // permutation of 0..n-1 over affine slots
  int n = 0, m = 0;
  double radius = 0.3;

  int free_count() const { return n - m; }
};

inline Chart make_chart(const PolySystem& sys, std::vector<int> sigma = {},
                        double radius = 0.3) {
  Chart chart;
  chart.sys = sys;
  chart.n = sys.n();
  chart.m = sys.m();
  chart.radius = radius;
  for (int f = 0; f < static_cast<int>(sys.factor_dims().size()); ++f) {
    for (int i = 0; i < sys.factor_dims()[f]; ++i)
      chart.affine_vars.push_back(sys.polys[0].var_index(f, i));
  }

  // the base point must lie on the zero set (exact check)
  std::vector<GaussianRational> base(sys.total_vars(), GaussianRational(Rational(0)));
  for (int f = 0; f < static_cast<int>(sys.factor_dims().size()); ++f) {
    base[sys.polys[0].var_index(f, sys.factor_dims()[f])] = GaussianRational(Rational(1));
  }
  for (const auto& p : sys.polys) {
    if (!p.evaluate<GaussianRational>(base).is_zero()) {
      throw Error(ErrorCode::SingularChartBlock, "base point is not on the zero set");
    }
  }

  // base-point Jacobian over affine columns
  auto flat = base_point(sys.factor_dims()).flat();
  CMatrix j0(chart.m, chart.n);
  for (int i = 0; i < chart.m; ++i)
    for (int j = 0; j < chart.n; ++j)
      j0(i, j) = sys.polys[i].partial(chart.affine_vars[j]).evaluate<std::complex<double>>(flat);

  if (sigma.empty()) {
    // greedy largest-pivot choice of dependent columns, never column 0
    CMatrix work = j0;
    std::vector<int> dependent;
    std::vector<bool> used_col(chart.n, false), used_row(chart.m, false);
    used_col[0] = true;  // sigma(0) = 0 stays free
    for (int step = 0; step < chart.m; ++step) {
      int best_r = -1, best_c = -1;
      double best = 0.0;
      for (int r = 0; r < chart.m; ++r) {
        if (used_row[r]) continue;
        for (int c = 0; c < chart.n; ++c) {
          if (used_col[c]) continue;
          if (std::abs(work(r, c)) > best) {
            best = std::abs(work(r, c));
            best_r = r;
            best_c = c;
          }
        }
      }
      if (best_r < 0 || best <= 0.0) {
        throw Error(ErrorCode::SingularChartBlock,
                    "base-point Jacobian has no usable pivot column");
      }
      used_row[best_r] = true;
      used_col[best_c] = true;
      dependent.push_back(best_c);
      for (int r = 0; r < chart.m; ++r) {
        if (used_row[r]) continue;
        std::complex<double> f = work(r, best_c) / work(best_r, best_c);
        work.row(r) -= f * work.row(best_r);
      }
    }
    for (int c = 0; c < chart.n; ++c) {
      bool dep = std::find(dependent.begin(), dependent.end(), c) != dependent.end();
      if (!dep) sigma.push_back(c);
    }
    sigma.insert(sigma.end(), dependent.begin(), dependent.end());
  }
  if (static_cast<int>(sigma.size()) != chart.n || sigma[0] != 0) {
    throw Error(ErrorCode::ConfigError, "sigma must permute 0..n-1 with sigma(0) = 0");
  }
  chart.sigma = sigma;

  // dependent block must be invertible with moderate conditioning
  CMatrix block(chart.m, chart.m);
  for (int j = 0; j < chart.m; ++j) block.col(j) = j0.col(chart.sigma[chart.n - chart.m + j]);
  Eigen::JacobiSVD<CMatrix> svd(block);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin >= 1e8) {
    throw Error(ErrorCode::SingularChartBlock,
                "dependent chart block is singular or too ill-conditioned");
  }
  return chart;
}

/// Newton solve for the dependent chart coordinates at the given free
/// values, from the initial guess 0; residual below 1e-12 on success.
inline std::vector<std::complex<double>> chart_newton(const Chart& chart,
                                                      const std::vector<std::complex<double>>& free) {
  if (static_cast<int>(free.size()) != chart.free_count()) {
    throw Error(ErrorCode::ConfigError, "wrong number of free coordinates");
  }
  for (const auto& w : free) {
    if (std::abs(w) >= chart.radius) {
      throw Error(ErrorCode::NewtonDivergence, "free values outside the chart radius");
    }
  }
  const int m = chart.m;
  std::vector<std::complex<double>> flat(chart.sys.total_vars(), 0.0);
  for (int f = 0; f < static_cast<int>(chart.sys.factor_dims().size()); ++f) {
    flat[chart.sys.polys[0].var_index(f, chart.sys.factor_dims()[f])] = 1.0;
  }
  for (int i = 0; i < chart.free_count(); ++i) {
    flat[chart.affine_vars[chart.sigma[i]]] = free[i];
  }
  CVector dep = CVector::Zero(m);

  for (int iter = 0; iter <= 50; ++iter) {
    for (int j = 0; j < m; ++j) {
      flat[chart.affine_vars[chart.sigma[chart.n - m + j]]] = dep[j];
    }
    CVector q(m);
    double res = 0.0;
    for (int i = 0; i < m; ++i) {
      q[i] = chart.sys.polys[i].evaluate<std::complex<double>>(flat);
      res = std::max(res, std::abs(q[i]));
    }
    if (res < 1e-12) {
      std::vector<std::complex<double>> out(dep.data(), dep.data() + m);
      return out;
    }
    if (iter == 50 || dep.cwiseAbs().maxCoeff() > 1.0) {
      throw Error(ErrorCode::NewtonDivergence, "chart Newton did not converge");
    }
    CMatrix jac(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        jac(i, j) = chart.sys.polys[i]
                        .partial(chart.affine_vars[chart.sigma[chart.n - m + j]])
                        .evaluate<std::complex<double>>(flat);
    dep -= jac.partialPivLu().solve(q);
  }
  throw Error(ErrorCode::NewtonDivergence, "chart Newton did not converge");
}

/// Chart parametrization w -> point on the zero set.
inline ProjectivePoint chart_point(const Chart& chart,
                                   const std::vector<std::complex<double>>& free) {
  auto dep = chart_newton(chart, free);
  std::vector<std::complex<double>> flat(chart.sys.total_vars(), 0.0);
  for (int f = 0; f < static_cast<int>(chart.sys.factor_dims().size()); ++f) {
    flat[chart.sys.polys[0].var_index(f, chart.sys.factor_dims()[f])] = 1.0;
  }
  for (int i = 0; i < chart.free_count(); ++i)
    flat[chart.affine_vars[chart.sigma[i]]] = free[i];
  for (int j = 0; j < chart.m; ++j)
    flat[chart.affine_vars[chart.sigma[chart.n - chart.m + j]]] = dep[j];
  return point_from_flat(flat, chart.sys.factor_dims());
}

/// Chart coordinates of a point near the base: rescale each factor so the
/// last coordinate is 1, then read the free slots.
inline std::vector<std::complex<double>> chart_read_free(const Chart& chart,
                                                         const ProjectivePoint& point) {
  ProjectivePoint p = point;
  for (int f = 0; f < p.factor_count(); ++f) {
    std::complex<double> last = p.coords[f][p.coords[f].size() - 1];
    if (std::abs(last) < 1e-8) {
      throw Error(ErrorCode::NewtonDivergence, "point left the chart domain");
    }
    p.coords[f] /= last;
  }
  auto flat = p.flat();
  std::vector<std::complex<double>> free(chart.free_count());
  for (int i = 0; i < chart.free_count(); ++i)
    free[i] = flat[chart.affine_vars[chart.sigma[i]]];
  return free;
}

struct LocalActionResiduals {
  double res_a = 0.0;
  double res_c = 0.0;
};

/// Measure how exactly the ambient involutions act as (-w0, w1, ...) and
/// conj(w) in chart coordinates; both vanish identically in exact
/// arithmetic, numerically bounded by the Newton tolerance.
inline LocalActionResiduals local_action_check(const PolySystem& sys, int num_samples = 100,
                                               double radius = 0.1, std::uint64_t seed = 0) {
  Chart chart = make_chart(sys);
  LocalActionResiduals out;
  const int k = chart.free_count();
  for (int s = 0; s < num_samples; ++s) {
    Rng rng = Rng::stream(seed, 9000 + s);
    std::vector<std::complex<double>> w(k);
    for (auto& wi : w) {
      double r = radius * rng.uniform();
      double phase = rng.uniform(0.0, 6.283185307179586);
      wi = std::polar(r, phase);
    }
    ProjectivePoint z = chart_point(chart, w);

    auto wa = chart_read_free(chart, involution_a(z));
    auto wc = chart_read_free(chart, involution_c(z));
    for (int i = 0; i < k; ++i) {
      std::complex<double> expect_a = (i == 0) ? -w[i] : w[i];
      out.res_a = std::max(out.res_a, std::abs(wa[i] - expect_a));
      out.res_c = std::max(out.res_c, std::abs(wc[i] - std::conj(w[i])));
    }
  }
  return out;
}

struct FixedPointDifferentials {
  Matrix da;  // antipodal map in the first complex coordinate, realified
  Matrix dc;  // complex conjugation, realified
  double fd_residual = 0.0;
  double det_dc = 0.0;
};

/// The real 2(n-m) x 2(n-m) differentials of the involutions in chart
/// coordinates at the shared fixed point, cross-validated against finite
/// differences of the chart maps. Realification order is
/// (Re w_0, Im w_0, Re w_1, Im w_1, ...).
inline FixedPointDifferentials differentials_at_fixed_point(const PolySystem& sys) {
  Chart chart = make_chart(sys);
  const int k = chart.free_count();
  FixedPointDifferentials out;
  out.da = Matrix::Identity(2 * k, 2 * k);
  out.da(0, 0) = -1.0;
  out.da(1, 1) = -1.0;
  out.dc = Matrix::Identity(2 * k, 2 * k);
  for (int i = 0; i < k; ++i) out.dc(2 * i + 1, 2 * i + 1) = -1.0;
  out.det_dc = (k % 2 == 0) ? 1.0 : -1.0;

  auto realify_map = [&](bool use_a) {
    return [&chart, k, use_a](const Vector& x) {
      std::vector<std::complex<double>> w(k);
      for (int i = 0; i < k; ++i) w[i] = {x[2 * i], x[2 * i + 1]};
      ProjectivePoint z = chart_point(chart, w);
      auto moved = chart_read_free(chart, use_a ? involution_a(z) : involution_c(z));
      Vector y(2 * k);
      for (int i = 0; i < k; ++i) {
        y[2 * i] = moved[i].real();
        y[2 * i + 1] = moved[i].imag();
      }
      return y;
    };
  };
  Matrix fd_a = finite_difference_jacobian(realify_map(true), Vector::Zero(2 * k), 1e-5);
  Matrix fd_c = finite_difference_jacobian(realify_map(false), Vector::Zero(2 * k), 1e-5);
  out.fd_residual = std::max(max_abs(fd_a - out.da), max_abs(fd_c - out.dc));
  return out;
}

// ---------------------------------------------------------------------------
// multidegree parity condition
// ---------------------------------------------------------------------------

/// Feasible factor indices: m_i = 0 or m - 2 m_i >= n - 2 n_i, with
/// m_i < n_i, where m_i counts odd entries of column i.
inline std::vector<int> parity_condition(const std::vector<int>& n_tuple,
                                         const std::vector<std::vector<int>>& d_matrix) {
  if (n_tuple.empty() || d_matrix.empty()) {
    throw Error(ErrorCode::BadShape, "need at least one factor and one row");
  }
  const int factors = static_cast<int>(n_tuple.size());
  const int m = static_cast<int>(d_matrix.size());
  int n = 0;
  for (int nf : n_tuple) {
    if (nf < 1) throw Error(ErrorCode::BadShape, "factor dimensions must be positive");
    n += nf;
  }
  for (const auto& row : d_matrix) {
    if (static_cast<int>(row.size()) != factors) {
      throw Error(ErrorCode::BadShape, "row width must match the factor count");
    }
    for (int d : row)
      if (d < 1) throw Error(ErrorCode::BadShape, "multidegree entries must be positive");
  }
  if (m >= n) throw Error(ErrorCode::BadShape, "need m < n");

  std::vector<int> feasible;
  for (int i = 0; i < factors; ++i) {
    int odd = 0;
    for (const auto& row : d_matrix)
      if (row[i] % 2 == 1) ++odd;
    bool cond = (odd == 0) || (m - 2 * odd >= n - 2 * n_tuple[i]);
    if (cond && odd < n_tuple[i]) feasible.push_back(i);
  }
  return feasible;
}

// ---------------------------------------------------------------------------
// family catalog
// ---------------------------------------------------------------------------

/// z_0^d + ... + z_{n-1}^d + z_{n-1} z_n^{d-1} in one projective factor.
inline PolySystem family_Xd(int d, int n) {
  if (d < 1 || n < 2) throw Error(ErrorCode::BadDegrees, "need d >= 1 and n >= 2");
  MultiHomogeneousPolynomial p;
  p.factor_dims = {n};
  for (int i = 0; i < n; ++i) {
    Exponents e(n + 1, 0u);
    e[i] = static_cast<unsigned>(d);
    p.add_term(e, 1);
  }
  Exponents tail(n + 1, 0u);
  tail[n - 1] += 1;
  tail[n] += static_cast<unsigned>(d - 1);
  p.add_term(tail, 1);
  p.finalize();
  return make_system({p});
}

/// z_{0,0}^2 p_1 + z_{0,1}^2 p_2 in P^1 x P^1 x P^1, with the documented
/// rational surrogate 355/113 for the transcendental coefficient.
inline PolySystem family_X2mn(int m, int n) {
  if (m < 1 || n < 1) throw Error(ErrorCode::BadDegrees, "need m, n >= 1");
  MultiHomogeneousPolynomial p;
  p.factor_dims = {1, 1, 1};
  auto mono = [&](unsigned a00, unsigned a01, unsigned b10, unsigned b11, unsigned c20,
                  unsigned c21) {
    Exponents e(6, 0u);
    e[0] = a00;
    e[1] = a01;
    e[2] = b10;
    e[3] = b11;
    e[4] = c20;
    e[5] = c21;
    return e;
  };
  unsigned um = static_cast<unsigned>(m), un = static_cast<unsigned>(n);
  // z00^2 * p1
  p.add_term(mono(2, 0, um, 0, un, 0), 1);
  p.add_term(mono(2, 0, 0, um, un, 0), 2);
  p.add_term(mono(2, 0, um, 0, 0, un), 3);
  p.add_term(mono(2, 0, 0, um, 0, un), Rational(355, 113));
  // z01^2 * p2
  p.add_term(mono(0, 2, um, 0, un, 0), 1);
  p.add_term(mono(0, 2, 0, um, un, 0), 1);
  p.add_term(mono(0, 2, um, 0, 0, un), 1);
  p.add_term(mono(0, 2, 1, um - 1, 0, un), 1);
  p.finalize();
  return make_system({p});
}

struct FamilySpec {
  std::string name;  // Xd | X2mn | qA | custom
  std::vector<int> int_params;
  std::string file_contents;       // custom only
  std::vector<int> custom_dims;    // custom only
};

inline PolySystem family_catalog(const FamilySpec& spec) {
  if (spec.name == "Xd") {
    if (spec.int_params.size() != 2) throw Error(ErrorCode::BadDegrees, "Xd needs (d, n)");
    return family_Xd(spec.int_params[0], spec.int_params[1]);
  }
  if (spec.name == "X2mn") {
    if (spec.int_params.size() != 2) throw Error(ErrorCode::BadDegrees, "X2mn needs (m, n)");
    return family_X2mn(spec.int_params[0], spec.int_params[1]);
  }
  if (spec.name == "qA") {
    if (spec.int_params.size() < 2) throw Error(ErrorCode::BadDegrees, "qA needs (d..., n)");
    std::vector<int> degrees(spec.int_params.begin(), spec.int_params.end() - 1);
    return witness_qA(degrees, spec.int_params.back());
  }
  if (spec.name == "custom") {
    return parse_poly_file(spec.file_contents, spec.custom_dims);
  }
  throw Error(ErrorCode::UnknownFamily, "unknown family '" + spec.name + "'");
}

}  // namespace twistlab

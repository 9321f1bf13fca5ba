#pragma once

#include <boost/numeric/odeint.hpp>
#include <functional>
#include <utility>
#include <vector>

#include "twistlab/error.hpp"
#include "twistlab/linalg_paths.hpp"
#include "twistlab/matrix_ops.hpp"
#include "twistlab/spin_lift.hpp"

namespace twistlab {

/// Canonical cutoff: 1 on [0,1], 0 on [2,inf), the symmetric exp-based
/// step in between. Returns (value, derivative).
inline std::pair<double, double> chi(double r) {
  if (r < 0.0) throw Error(ErrorCode::NegativeRadius, "chi requires r >= 0");
  if (r <= 1.0) return {1.0, 0.0};
  if (r >= 2.0) return {0.0, 0.0};
  double num = bump_sigma(2.0 - r);
  double den = num + bump_sigma(r - 1.0);
  auto dsigma = [](double u) { return u > 0.0 ? bump_sigma(u) / (u * u) : 0.0; };
  double deriv =
      -(dsigma(2.0 - r) * bump_sigma(r - 1.0) + num * dsigma(r - 1.0)) / (den * den);
  return {num / den, deriv};
}

/// Black-box smooth embedding of the radius-3 ball with a Jacobian
/// evaluator (finite differences unless a closed form is supplied).
struct NumericDiffeo {
  int n = 0;
  std::function<Vector(const Vector&)> forward;
  std::function<Matrix(const Vector&)> jacobian_at;
  bool identity_near_boundary = false;
};

inline NumericDiffeo make_diffeo(int n, std::function<Vector(const Vector&)> forward,
                                 std::function<Matrix(const Vector&)> jacobian = nullptr) {
  NumericDiffeo d;
  d.n = n;
  d.forward = std::move(forward);
  if (jacobian) {
    d.jacobian_at = std::move(jacobian);
  } else {
    auto f = d.forward;
    d.jacobian_at = [f](const Vector& v) { return finite_difference_jacobian(f, v); };
  }
  return d;
}

inline NumericDiffeo identity_diffeo(int n) {
  return make_diffeo(
      n, [](const Vector& v) { return v; },
      [n](const Vector&) { return Matrix::Identity(n, n); });
}

/// Second-order derivative of a matrix path, one-sided at the ends.
inline Matrix path_derivative(const std::function<Matrix(double)>& rho, double s, double h,
                              double s0, double s1) {
  if (s - h >= s0 && s + h <= s1) return (rho(s + h) - rho(s - h)) / (2.0 * h);
  if (s + 2 * h <= s1) return (-3.0 * rho(s) + 4.0 * rho(s + h) - rho(s + 2 * h)) / (2.0 * h);
  return (3.0 * rho(s) - 4.0 * rho(s - h) + rho(s - 2 * h)) / (2.0 * h);
}

/// Flow the cutoff vector field u -> chi(|u|) rho'(s) rho(s)^-1 u from 0
/// to t, then apply f. Near the origin the flow is exactly v -> rho(t) v;
/// outside radius 2 it is the identity.
inline Vector deform_by_flow(const NumericDiffeo& f, const std::function<Matrix(double)>& rho,
                             double t, const Vector& v) {
  const int n = f.n;
  if (v.norm() >= 3.0) throw Error(ErrorCode::LeftDomain, "start point outside the radius-3 ball");
  if (max_abs(rho(0.0) - Matrix::Identity(n, n)) > 1e-8) {
    throw Error(ErrorCode::ConfigError, "rho(0) must be the identity");
  }
  if (t < 0.0 || t > 1.0) throw Error(ErrorCode::ConfigError, "t must lie in [0,1]");

  using State = std::vector<double>;
  auto system = [&](const State& u, State& dudt, double s) {
    Vector uv = Eigen::Map<const Vector>(u.data(), n);
    if (uv.norm() >= 3.0) {
      throw Error(ErrorCode::LeftDomain, "flow left the radius-3 ball");
    }
    Matrix m = rho(s);
    Matrix field = path_derivative(rho, s, 1e-6, 0.0, 1.0) * m.partialPivLu().inverse();
    Vector d = chi(uv.norm()).first * (field * uv);
    dudt.assign(d.data(), d.data() + n);
  };

  State state(v.data(), v.data() + n);
  if (t > 0.0) {
    namespace ode = boost::numeric::odeint;
    try {
      auto stepper = ode::make_controlled(1e-10, 1e-10, ode::runge_kutta_dopri5<State>());
      ode::integrate_adaptive(stepper, system, state, 0.0, t, std::min(0.01, t));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IntegratorFailure, e.what());
    }
  }
  return f.forward(Eigen::Map<const Vector>(state.data(), n));
}

inline Vector deform_by_flow(const NumericDiffeo& f, const SampledPath& rho, double t,
                             const Vector& v) {
  return deform_by_flow(f, rho.eval, t, v);
}

/// f(v) - t chi(|v|/eps) (f(v) - Df_0 v): agrees with f outside radius
/// 2 eps, fixes the Jacobian at 0, and is exactly linear on the eps-ball
/// at t = 1.
inline Vector linear_localize(const NumericDiffeo& f, double eps, double t, const Vector& v) {
  if (eps <= 0.0 || eps >= 1.0) throw Error(ErrorCode::ConfigError, "eps must lie in (0,1)");
  Matrix df0 = f.jacobian_at(Vector::Zero(f.n));
  Vector fv = f.forward(v);
  return fv - t * chi(v.norm() / eps).first * (fv - df0 * v);
}

inline NumericDiffeo localized_diffeo(const NumericDiffeo& f, double eps, double t) {
  Matrix df0 = f.jacobian_at(Vector::Zero(f.n));
  auto fwd = f.forward;
  NumericDiffeo out = make_diffeo(f.n, [fwd, df0, eps, t](const Vector& v) {
    Vector fv = fwd(v);
    return Vector(fv - t * chi(v.norm() / eps).first * (fv - df0 * v));
  });
  out.identity_near_boundary = f.identity_near_boundary;
  return out;
}

/// Orientation check on a radial grid: 32 radii per axis direction. Throws
/// NotEmbedding when a finite-difference Jacobian determinant drops to 0.
inline void check_embedding_radial(const NumericDiffeo& d, double r_max = 2.5,
                                   int radial_points = 32) {
  for (int axis = 0; axis < d.n; ++axis) {
    for (int s : {-1, 1}) {
      for (int k = 1; k <= radial_points; ++k) {
        double r = r_max * k / radial_points;
        Vector v = Vector::Zero(d.n);
        v[axis] = s * r;
        if (d.jacobian_at(v).determinant() <= 0.0) {
          throw Error(ErrorCode::NotEmbedding,
                      "Jacobian determinant nonpositive at radius " + std::to_string(r));
        }
      }
    }
  }
}

/// Halving search for the localization radius: accept the first eps whose
/// t = 1 localization passes the radial embedding check.
inline double choose_epsilon(const NumericDiffeo& f, double eps0 = 0.5) {
  double eps = eps0;
  while (eps > 1e-6) {
    try {
      check_embedding_radial(localized_diffeo(f, eps, 1.0));
      return eps;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotEmbedding) throw;
      eps *= 0.5;
    }
  }
  throw Error(ErrorCode::NotEmbedding, "no eps in [1e-6, eps0] passes the embedding check");
}

/// Twist profile: rotations parametrized by radius, identity on [1,2],
/// the canonical involutive pair from radius 3 on. `grid` is the sampling
/// density consumers use per unit radius.
struct TwistProfile {
  int n = 0;
  int grid = 1024;
  std::function<Matrix(double)> rho_k;
  std::function<Matrix(double)> rho_i;
};

inline Matrix exact_rk(int n) {
  Matrix m = Matrix::Identity(n, n);
  m(0, 0) = -1.0;
  m(1, 1) = -1.0;
  return m;
}

inline Matrix exact_ri(int n) {
  Matrix m = Matrix::Identity(n, n);
  m(1, 1) = -1.0;
  m(2, 2) = -1.0;
  return m;
}

inline TwistProfile twist_profile(int n, int grid = 1024) {
  if (n < 3) throw Error(ErrorCode::DimensionTooSmall, "twist profile requires n >= 3");
  TwistProfile p;
  p.n = n;
  p.grid = grid;
  p.rho_k = [n](double s) {
    if (s <= 2.0) return Matrix(Matrix::Identity(n, n));
    if (s >= 3.0) return exact_rk(n);
    return rot_k(smooth_step(s - 2.0), n);
  };
  p.rho_i = [n](double s) {
    if (s <= 2.0) return Matrix(Matrix::Identity(n, n));
    if (s >= 3.0) return exact_ri(n);
    return rot_i(smooth_step(s - 2.0), n);
  };
  return p;
}

struct CollarMaps {
  NumericDiffeo a;  // v -> rho_k(|v|) v
  NumericDiffeo c;  // v -> rho_i(|v|) v
};

/// The collar diffeomorphisms on the annulus 1 <= |v| <= 4: identity for
/// |v| in [1,2] exactly, linear (r_k + I, r_i + I) from radius 3 on.
inline CollarMaps collar_maps(const TwistProfile& profile) {
  CollarMaps out;
  auto rho_k = profile.rho_k;
  auto rho_i = profile.rho_i;
  const int n = profile.n;
  out.a = make_diffeo(n, [rho_k](const Vector& v) { return Vector(rho_k(v.norm()) * v); });
  out.c = make_diffeo(n, [rho_i](const Vector& v) { return Vector(rho_i(v.norm()) * v); });
  out.a.identity_near_boundary = true;
  out.c.identity_near_boundary = true;
  return out;
}

/// Class of the loop t -> [rho_k(t), rho_i(t)] over t in [1,4]; -1 means
/// the collar commutator twists by the generator of the fundamental group.
inline int collar_commutator_class(const TwistProfile& profile, int grid = 0) {
  if (grid <= 0) grid = std::max(64, 3 * profile.grid);
  SOLoop loop;
  loop.n = profile.n;
  for (int m = 0; m <= grid; ++m) {
    double t = 1.0 + 3.0 * static_cast<double>(m) / grid;
    Matrix rk = profile.rho_k(t);
    Matrix ri = profile.rho_i(t);
    loop.times.push_back(static_cast<double>(m) / grid);
    loop.values.push_back(rk * ri * rk.transpose() * ri.transpose());
  }
  return lift_loop(loop);
}

struct Standardization {
  SynthResult paths;
  std::function<Matrix(double)> recipe_a;  // A^-1 alpha(t), the flow input for a
  std::function<Matrix(double)> recipe_c;  // C^-1 gamma(t)
  double epsilon = 0.5;
  int nu = 0;
  bool parity_zero = false;
  Matrix local_model_a, local_model_c;
};

/// Full local standardization recipe from the differentials at the shared
/// fixed point: commuting paths to the canonical pair, the matrix paths to
/// feed deform_by_flow, and the localization radius. When the actual local
/// maps are supplied the radius comes from the halving search; for the
/// default linear models the first candidate passes.
inline Standardization standardize_pair(const Matrix& a_jac, const Matrix& c_jac, int grid = 1024,
                                        const NumericDiffeo* a_map = nullptr,
                                        const NumericDiffeo* c_map = nullptr) {
  CommutingPair pair{a_jac, c_jac, 1e-10};
  validate_pair(pair, /*require_orientation=*/true);
  Standardization out;
  out.paths = synth_commuting_path(pair, grid);
  out.nu = out.paths.nu;
  out.parity_zero = (out.nu == 0);

  Matrix a_inv = a_jac.partialPivLu().inverse();
  Matrix c_inv = c_jac.partialPivLu().inverse();
  auto alpha = out.paths.alpha.eval;
  auto gamma = out.paths.gamma.eval;
  out.recipe_a = [a_inv, alpha](double t) { return Matrix(a_inv * alpha(t)); };
  out.recipe_c = [c_inv, gamma](double t) { return Matrix(c_inv * gamma(t)); };

  const int n = pair.n();
  NumericDiffeo linear_a = make_diffeo(
      n, [a_jac](const Vector& v) { return Vector(a_jac * v); },
      [a_jac](const Vector&) { return a_jac; });
  NumericDiffeo linear_c = make_diffeo(
      n, [c_jac](const Vector& v) { return Vector(c_jac * v); },
      [c_jac](const Vector&) { return c_jac; });
  double eps_a = choose_epsilon(a_map ? *a_map : linear_a);
  double eps_c = choose_epsilon(c_map ? *c_map : linear_c);
  out.epsilon = std::min(eps_a, eps_c);

  out.local_model_a = out.paths.alpha.values.back();
  out.local_model_c = out.paths.gamma.values.back();
  CommutingPair canon = canonical_pair(n, out.nu);
  if (max_abs(out.local_model_a - canon.a) > 1e-8 ||
      max_abs(out.local_model_c - canon.c) > 1e-8) {
    throw Error(ErrorCode::PathDegenerate, "local model does not match the canonical pair");
  }
  return out;
}

}  // namespace twistlab

#pragma once

#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "twistlab/complete_intersections.hpp"
#include "twistlab/local_flows.hpp"
#include "twistlab/spin_lift.hpp"

namespace twistlab {

using Json = nlohmann::ordered_json;

struct PipelineConfig {
  FamilySpec family;
  int n_samples = 1000;
  std::uint64_t seed = 0;
  int grid = 1024;
  int threads = 1;
  std::map<std::string, double> tolerances;

  double tol(const std::string& name, double fallback) const {
    auto it = tolerances.find(name);
    return it == tolerances.end() ? fallback : it->second;
  }
};

inline Json config_to_json(const PipelineConfig& c) {
  Json family;
  family["name"] = c.family.name;
  if (c.family.name == "Xd") {
    family["d"] = c.family.int_params.at(0);
    family["n"] = c.family.int_params.at(1);
  } else if (c.family.name == "X2mn") {
    family["m"] = c.family.int_params.at(0);
    family["n"] = c.family.int_params.at(1);
  } else if (c.family.name == "qA") {
    family["d"] = std::vector<int>(c.family.int_params.begin(), c.family.int_params.end() - 1);
    family["n"] = c.family.int_params.back();
  } else {
    family["dims"] = c.family.custom_dims;
    family["polynomials"] = c.family.file_contents;
  }
  Json j;
  j["family"] = family;
  j["n_samples"] = c.n_samples;
  j["seed"] = c.seed;
  j["grid"] = c.grid;
  j["threads"] = c.threads;
  j["tolerances"] = c.tolerances.empty() ? Json::object() : Json(c.tolerances);
  return j;
}

inline PipelineConfig config_from_json(const Json& j) {
  PipelineConfig c;
  if (!j.contains("family")) throw Error(ErrorCode::ConfigError, "config needs a family");
  const Json& f = j.at("family");
  c.family.name = f.value("name", "");
  if (c.family.name == "Xd") {
    c.family.int_params = {f.at("d").get<int>(), f.at("n").get<int>()};
  } else if (c.family.name == "X2mn") {
    c.family.int_params = {f.at("m").get<int>(), f.at("n").get<int>()};
  } else if (c.family.name == "qA") {
    for (int d : f.at("d")) c.family.int_params.push_back(d);
    c.family.int_params.push_back(f.at("n").get<int>());
  } else if (c.family.name == "custom") {
    c.family.custom_dims = f.at("dims").get<std::vector<int>>();
    c.family.file_contents = f.at("polynomials").get<std::string>();
  } else {
    throw Error(ErrorCode::ConfigError, "unknown family name in config");
  }
  c.n_samples = j.value("n_samples", 1000);
  c.seed = j.value("seed", std::uint64_t{0});
  c.grid = j.value("grid", 1024);
  c.threads = j.value("threads", 1);
  if (j.contains("tolerances")) {
    for (auto& [k, v] : j.at("tolerances").items()) c.tolerances[k] = v.get<double>();
  }
  if (c.n_samples < 1 || c.grid < 16 || c.threads < 1) {
    throw Error(ErrorCode::ConfigError, "n_samples, grid and threads must be positive");
  }
  for (auto& [k, v] : c.tolerances) {
    if (v <= 0.0) throw Error(ErrorCode::ConfigError, "tolerances must be positive");
  }
  return c;
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j) {
  int rows = static_cast<int>(j.size());
  int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  return m;
}

inline Json loop_to_json(const SOLoop& loop) {
  Json j;
  j["n"] = loop.n;
  j["times"] = loop.times;
  Json samples = Json::array();
  for (const auto& v : loop.values) samples.push_back(matrix_to_json(v));
  j["samples"] = samples;
  return j;
}

inline SOLoop loop_from_json(const Json& j) {
  SOLoop loop;
  loop.n = j.at("n").get<int>();
  for (const auto& t : j.at("times")) loop.times.push_back(t.get<double>());
  for (const auto& s : j.at("samples")) loop.values.push_back(matrix_from_json(s));
  if (loop.times.size() != loop.values.size()) {
    throw Error(ErrorCode::ConfigError, "times and samples lengths differ");
  }
  return loop;
}

struct StageRecord {
  std::string name;
  std::string status;  // pass | fail | skipped | error
  Json details = Json::object();
};

struct VerificationReport {
  PipelineConfig config;
  std::vector<StageRecord> stages;
  std::string verdict = "pass";
  std::vector<std::string> flags;
  std::vector<std::string> unverified_hypotheses;

  int exit_code() const {
    if (verdict == "pass") return 0;
    if (verdict == "fail") return 1;
    return 2;
  }

  Json to_json() const {
    Json j;
    j["config"] = config_to_json(config);
    Json stage_array = Json::array();
    for (const auto& s : stages) {
      Json rec;
      rec["name"] = s.name;
      rec["status"] = s.status;
      rec["details"] = s.details;
      stage_array.push_back(rec);
    }
    j["stages"] = stage_array;
    j["flags"] = flags;
    j["unverified_hypotheses"] = unverified_hypotheses;
    j["verdict"] = verdict;
    return j;
  }
};

namespace detail {

inline Json smoothness_to_json(const SmoothnessReport& r) {
  Json j;
  j["samples_requested"] = r.samples_requested;
  j["samples_converged"] = r.samples_converged;
  j["min_singular_value"] = r.min_singular_value;
  j["sigma_threshold"] = r.sigma_threshold;
  Json failures = Json::array();
  for (const auto& f : r.failures) {
    Json rec;
    rec["sample_index"] = f.sample_index;
    rec["sigma_min"] = f.sigma_min;
    rec["residual"] = f.residual;
    Json point = Json::array();
    for (const auto& z : f.point) point.push_back(Json::array({z.real(), z.imag()}));
    rec["point"] = point;
    failures.push_back(rec);
  }
  j["failures"] = failures;
  Json special = Json::object();
  for (const auto& s : r.special_points) {
    Json rec;
    rec["on_zero_set"] = s.on_zero_set;
    rec["singular"] = s.singular;
    rec["max_abs_value"] = s.max_abs_value;
    rec["max_abs_minor"] = s.max_abs_minor;
    special[s.name] = rec;
  }
  j["special_points"] = special;
  j["branch_point_off_zero_set"] = r.branch_point_off_zero_set;
  return j;
}

}  // namespace detail

/// Full verification chain: polynomial symmetries, sampled smoothness,
/// chart residuals, fixed-point differentials, the commuting-path
/// synthesis, the collar loop class, and the spin obstruction, with
/// short-circuit on the first failing stage.
inline VerificationReport run_verify_family(const PipelineConfig& config) {
  VerificationReport report;
  report.config = config;

  std::optional<PolySystem> sys_opt;
  bool done = false;
  bool skip_rest = false;
  int nu = -1;
  Matrix da, dc;

  auto run_stage = [&](const std::string& name, auto&& body) {
    if (done || skip_rest) {
      report.stages.push_back({name, "skipped", Json::object()});
      return;
    }
    StageRecord rec;
    rec.name = name;
    try {
      bool ok = body(rec.details);
      rec.status = ok ? "pass" : "fail";
      if (!ok) {
        report.verdict = "fail";
        done = true;
      }
    } catch (const Error& e) {
      rec.status = "error";
      rec.details["error"] = std::string(error_code_name(e.code()));
      rec.details["message"] = e.what();
      report.verdict = "error";
      done = true;
    }
    report.stages.push_back(rec);
  };

  if (config.family.name == "X2mn") {
    report.flags.push_back(
        "transcendental coefficient represented by the rational surrogate 355/113; "
        "smoothness is re-verified by the sampled scan rather than assumed");
  }

  run_stage("family_catalog", [&](Json& details) {
    sys_opt = family_catalog(config.family);
    const PolySystem& sys = *sys_opt;
    Json polys = Json::array();
    for (const auto& p : sys.polys) polys.push_back(p.to_string());
    details["polynomials"] = polys;
    details["factor_dims"] = sys.factor_dims();
    Json degs = Json::array();
    for (const auto& p : sys.polys) degs.push_back(p.multidegree);
    details["multidegrees"] = degs;
    details["m"] = sys.m();
    details["n"] = sys.n();
    return true;
  });
  const PolySystem& sys = sys_opt ? *sys_opt : PolySystem{};

  run_stage("symmetry_conditions", [&](Json& details) {
    auto rep = symmetry_conditions(sys);
    Json per = Json::array();
    for (const auto& c : rep.per_poly) {
      Json rec;
      rec["real_coefficients"] = c.real_coefficients;
      rec["even_leading_power"] = c.even_leading_power;
      rec["positive_other_coordinate"] = c.positive_other_coordinate;
      per.push_back(rec);
    }
    details["per_polynomial"] = per;
    return rep.all();
  });

  run_stage("invariance_check", [&](Json& details) {
    bool ok = invariance_check(sys, 32, config.seed);
    details["coefficient_identities_exact"] = ok;
    return ok;
  });

  SmoothnessReport smoothness;
  run_stage("smoothness_scan", [&](Json& details) {
    smoothness = smoothness_scan(sys, config.n_samples, config.seed,
                                 config.tol("sigma_threshold", 1e-6), config.threads);
    details = detail::smoothness_to_json(smoothness);
    return smoothness.failures.empty() && smoothness.samples_converged > 0;
  });

  run_stage("local_action_check", [&](Json& details) {
    auto res = local_action_check(sys, 100, config.tol("chart_radius", 0.1), config.seed);
    details["res_a"] = res.res_a;
    details["res_c"] = res.res_c;
    double tol = config.tol("chart_residual", 1e-8);
    details["tolerance"] = tol;
    return res.res_a <= tol && res.res_c <= tol;
  });

  run_stage("differentials_at_fixed_point", [&](Json& details) {
    auto d = differentials_at_fixed_point(sys);
    da = d.da;
    dc = d.dc;
    details["da"] = matrix_to_json(d.da);
    details["dc"] = matrix_to_json(d.dc);
    details["fd_residual"] = d.fd_residual;
    details["det_dc"] = d.det_dc;
    if (d.det_dc < 0.0) {
      report.flags.push_back(
          "conjugation differential reverses orientation (odd complex dimension); the "
          "orientation-preserving commutator chain does not apply, remaining stages skipped");
      skip_rest = true;
    }
    return d.fd_residual <= config.tol("fd_residual", 1e-6);
  });

  run_stage("negative_parity", [&](Json& details) {
    nu = negative_parity({da, dc, 1e-10});
    details["nu"] = nu;
    if (nu == 0) {
      report.flags.push_back(
          "negative parity is zero: the boundary-twist pipeline needs odd parity inputs");
    }
    return true;
  });

  SynthResult synth;
  run_stage("synth_commuting_path", [&](Json& details) {
    synth = synth_commuting_path({da, dc, 1e-10}, config.grid);
    auto canon = canonical_pair(static_cast<int>(da.rows()), synth.nu);
    double end_err = std::max(max_abs(synth.alpha.values.back() - canon.a),
                              max_abs(synth.gamma.values.back() - canon.c));
    double comm = path_commutator_residual(synth.alpha, synth.gamma);
    double min_det = std::numeric_limits<double>::infinity();
    for (const auto& v : synth.alpha.values) min_det = std::min(min_det, v.determinant());
    for (const auto& v : synth.gamma.values) min_det = std::min(min_det, v.determinant());
    details["nu"] = synth.nu;
    details["endpoint_error"] = end_err;
    details["commutator_residual"] = comm;
    details["min_determinant"] = min_det;
    details["lipschitz_alpha"] = synth.alpha.lipschitz;
    details["lipschitz_gamma"] = synth.gamma.lipschitz;
    return end_err <= config.tol("endpoint_error", 1e-8) &&
           comm <= config.tol("path_commutator", 1e-8) && min_det > 0.0 && synth.nu == nu;
  });

  run_stage("twist_profile", [&](Json& details) {
    const int n = static_cast<int>(da.rows());
    auto profile = twist_profile(n);
    double identity_zone = 0.0, constant_zone = 0.0, ortho = 0.0;
    for (int m = 0; m <= 64; ++m) {
      double inner = 1.0 + m / 64.0;
      identity_zone = std::max(
          identity_zone, max_abs(profile.rho_k(inner) - Matrix::Identity(n, n)));
      double outer = 3.0 + m / 64.0;
      constant_zone = std::max(constant_zone, max_abs(profile.rho_k(outer) - exact_rk(n)));
      double mid = 1.0 + 3.0 * m / 64.0;
      Matrix r = profile.rho_i(mid);
      ortho = std::max(ortho, max_abs(r.transpose() * r - Matrix::Identity(n, n)));
    }
    details["identity_zone_residual"] = identity_zone;
    details["constant_zone_residual"] = constant_zone;
    details["orthogonality_residual"] = ortho;
    return identity_zone == 0.0 && constant_zone == 0.0 && ortho <= 1e-10;
  });

  run_stage("collar_commutator_class", [&](Json& details) {
    int sign = collar_commutator_class(twist_profile(static_cast<int>(da.rows())), config.grid);
    details["class_sign"] = sign;
    return sign == -1;
  });

  run_stage("spin_obstruction_of_pair", [&](Json& details) {
    auto obs = spin_obstruction_of_pair({da, dc, 1e-10}, config.grid);
    details["nu"] = obs.nu;
    details["lift_sign"] = obs.lift_sign;
    return obs.nu == nu && obs.lift_sign == (nu == 1 ? -1 : 1);
  });

  report.unverified_hypotheses.push_back(
      "smooth-isotopy hypothesis: the ambient commutator [a, c] is assumed smoothly isotopic "
      "to the identity through diffeomorphisms whose differentials fix the tangent space at "
      "the shared fixed point; this global input has no finite numerical certificate");
  report.unverified_hypotheses.push_back(
      "genericity: smoothness of the cut-out set is corroborated by " +
      std::to_string(smoothness.samples_converged) + " convergent samples (min singular value " +
      std::to_string(smoothness.min_singular_value) + "), not certified");

  return report;
}

}  // namespace twistlab

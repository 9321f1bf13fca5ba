// twistlab: command-line driver for the verification chain.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <twistlab/pipeline.hpp>

using namespace twistlab;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const Json& j, const std::string& out_path) {
  if (out_path.empty()) return;
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write file: " + out_path);
  out << j.dump(2) << "\n";
}

std::vector<int> parse_csv_ints(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "expected a comma-separated int list");
  return out;
}

struct FamilyFlags {
  std::string family;
  std::string d_csv;
  int n = -1;
  int m = -1;
  std::string poly_file;
  std::string dims_csv;
};

void add_family_flags(CLI::App* cmd, FamilyFlags& f) {
  cmd->add_option("--family", f.family, "family name: Xd | X2mn | qA");
  cmd->add_option("--d", f.d_csv, "degree (list for qA)");
  cmd->add_option("--n", f.n, "projective dimension parameter");
  cmd->add_option("--m", f.m, "first parameter of X2mn");
  cmd->add_option("--poly-file", f.poly_file, "polynomial file (one per line, # comments)");
  cmd->add_option("--dims", f.dims_csv, "factor dimensions for --poly-file, e.g. 3 or 1,1,1");
}

FamilySpec resolve_family(const FamilyFlags& f) {
  FamilySpec spec;
  if (!f.poly_file.empty()) {
    spec.name = "custom";
    spec.file_contents = read_file(f.poly_file);
    if (f.dims_csv.empty()) throw Error(ErrorCode::ConfigError, "--poly-file needs --dims");
    spec.custom_dims = parse_csv_ints(f.dims_csv);
    return spec;
  }
  spec.name = f.family;
  if (f.family == "Xd") {
    auto d = parse_csv_ints(f.d_csv);
    if (d.size() != 1 || f.n < 0) throw Error(ErrorCode::ConfigError, "Xd needs --d D --n N");
    spec.int_params = {d[0], f.n};
  } else if (f.family == "X2mn") {
    if (f.m < 0 || f.n < 0) throw Error(ErrorCode::ConfigError, "X2mn needs --m M --n N");
    spec.int_params = {f.m, f.n};
  } else if (f.family == "qA") {
    auto d = parse_csv_ints(f.d_csv);
    if (f.n < 0) throw Error(ErrorCode::ConfigError, "qA needs --d D1,D2,... --n N");
    spec.int_params = d;
    spec.int_params.push_back(f.n);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown or missing --family (and no --poly-file)");
  }
  return spec;
}

void print_report_human(const VerificationReport& report) {
  for (const auto& s : report.stages) {
    std::cout << "  [" << s.status << "] " << s.name;
    if (s.name == "smoothness_scan" && s.details.contains("min_singular_value")) {
      std::cout << "  (min sigma " << s.details["min_singular_value"].get<double>()
                << ", converged " << s.details["samples_converged"].get<int>() << ")";
    }
    if (s.name == "negative_parity" && s.details.contains("nu")) {
      std::cout << "  (nu = " << s.details["nu"].get<int>() << ")";
    }
    if (s.name == "synth_commuting_path" && s.details.contains("commutator_residual")) {
      std::cout << "  (endpoint " << s.details["endpoint_error"].get<double>()
                << ", commutator " << s.details["commutator_residual"].get<double>() << ")";
    }
    if (s.name == "collar_commutator_class" && s.details.contains("class_sign")) {
      std::cout << "  (sign " << s.details["class_sign"].get<int>() << ")";
    }
    if (s.name == "spin_obstruction_of_pair" && s.details.contains("lift_sign")) {
      std::cout << "  (nu " << s.details["nu"].get<int>() << ", lift "
                << s.details["lift_sign"].get<int>() << ")";
    }
    if (s.status == "error" && s.details.contains("message")) {
      std::cout << "  " << s.details["message"].get<std::string>();
    }
    std::cout << "\n";
  }
  for (const auto& f : report.flags) std::cout << "  flag: " << f << "\n";
  for (const auto& h : report.unverified_hypotheses) std::cout << "  unverified: " << h << "\n";
  std::cout << "verdict: " << report.verdict << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale verification of boundary-twist commutator constructions"};
  app.require_subcommand(1);

  // verify-family ------------------------------------------------------
  auto* verify = app.add_subcommand("verify-family", "run the full verification chain");
  FamilyFlags vf;
  add_family_flags(verify, vf);
  std::string config_path, out_path;
  int samples = -1, grid = -1, threads = -1;
  std::int64_t seed = -1;
  bool as_json = false;
  verify->add_option("--config", config_path, "JSON config file");
  verify->add_option("--samples", samples, "smoothness samples");
  verify->add_option("--seed", seed, "RNG seed");
  verify->add_option("--grid", grid, "path/loop grid");
  verify->add_option("--threads", threads, "scan worker count");
  verify->add_flag("--json", as_json, "print the machine-readable report");
  verify->add_option("--out", out_path, "write the JSON report to a file");

  // spin-class ---------------------------------------------------------
  auto* spin = app.add_subcommand("spin-class", "lift a loop and print its class sign");
  bool gen_comm = false;
  int spin_n = 3, spin_grid = 2048;
  std::string loop_file;
  bool spin_json = false;
  spin->add_flag("--generator-commutator", gen_comm, "use the generator commutator loop");
  spin->add_option("--n", spin_n, "dimension");
  spin->add_option("--grid", spin_grid, "samples per loop");
  spin->add_option("--loop-file", loop_file, "JSON loop {n, times, samples}");
  spin->add_flag("--json", spin_json, "JSON output");

  // path-synth ---------------------------------------------------------
  auto* synth_cmd =
      app.add_subcommand("path-synth", "synthesize commuting paths to canonical form");
  bool use_identity = false, use_canonical = false;
  int ps_n = 4, ps_nu = 1, ps_grid = 1024;
  std::string pair_file;
  bool ps_json = false;
  synth_cmd->add_flag("--identity", use_identity, "identity pair");
  synth_cmd->add_flag("--canonical", use_canonical, "canonical pair for --nu");
  synth_cmd->add_option("--n", ps_n, "dimension");
  synth_cmd->add_option("--nu", ps_nu, "parity for --canonical");
  synth_cmd->add_option("--grid", ps_grid, "samples per path");
  synth_cmd->add_option("--pair-file", pair_file, "JSON pair {a, c} as row-major matrices");
  synth_cmd->add_flag("--json", ps_json, "JSON output");

  // scan-smoothness ----------------------------------------------------
  auto* scan = app.add_subcommand("scan-smoothness", "Monte Carlo smoothness probe");
  FamilyFlags sf;
  add_family_flags(scan, sf);
  int scan_samples = 1000, scan_threads = 1;
  std::int64_t scan_seed = 0;
  double sigma_threshold = 1e-6;
  bool scan_json = false;
  std::string scan_out;
  scan->add_option("--samples", scan_samples, "number of samples");
  scan->add_option("--seed", scan_seed, "RNG seed");
  scan->add_option("--sigma-threshold", sigma_threshold, "singularity flag threshold");
  scan->add_option("--threads", scan_threads, "worker count");
  scan->add_flag("--json", scan_json, "JSON output");
  scan->add_option("--out", scan_out, "write the JSON report to a file");

  // twist-demo ---------------------------------------------------------
  auto* twist =
      app.add_subcommand("twist-demo", "print the collar commutator loop and its class");
  int tw_n = 3, tw_grid = 2048;
  bool tw_json = false;
  twist->add_option("--n", tw_n, "dimension");
  twist->add_option("--grid", tw_grid, "loop grid");
  twist->add_flag("--json", tw_json, "JSON output");

  // parity-check -------------------------------------------------------
  auto* parity = app.add_subcommand("parity-check", "multidegree parity condition");
  std::string parity_n, parity_d;
  bool parity_json = false;
  parity->add_option("--n", parity_n, "factor dimensions, e.g. 1,1,1")->required();
  parity->add_option("--d", parity_d, "multidegree rows, ';'-separated, e.g. 2,2,2;3,1,2")
      ->required();
  parity->add_flag("--json", parity_json, "JSON output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) {
      PipelineConfig config;
      if (!config_path.empty()) {
        config = config_from_json(Json::parse(read_file(config_path)));
      }
      if (!vf.family.empty() || !vf.poly_file.empty()) config.family = resolve_family(vf);
      if (config.family.name.empty()) {
        throw Error(ErrorCode::ConfigError, "no family given (flags or --config)");
      }
      if (samples > 0) config.n_samples = samples;
      if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
      if (grid > 0) config.grid = grid;
      if (threads > 0) config.threads = threads;

      VerificationReport report = run_verify_family(config);
      if (as_json) {
        std::cout << report.to_json().dump(2) << "\n";
      } else {
        print_report_human(report);
      }
      write_output(report.to_json(), out_path);
      return report.exit_code();
    }

    if (*spin) {
      SOLoop loop;
      if (!loop_file.empty()) {
        loop = loop_from_json(Json::parse(read_file(loop_file)));
      } else if (gen_comm) {
        loop = generator_loops(spin_n, spin_grid).commutator;
      } else {
        throw Error(ErrorCode::ConfigError, "need --generator-commutator or --loop-file");
      }
      int sign = lift_loop(loop);
      if (spin_json) {
        Json j;
        j["n"] = loop.n;
        j["samples"] = loop.values.size();
        j["class_sign"] = sign;
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "spin class sign: " << sign << "\n";
      }
      return 0;
    }

    if (*synth_cmd) {
      CommutingPair pair{Matrix::Identity(ps_n, ps_n), Matrix::Identity(ps_n, ps_n), 1e-10};
      if (!pair_file.empty()) {
        Json j = Json::parse(read_file(pair_file));
        pair.a = matrix_from_json(j.at("a"));
        pair.c = matrix_from_json(j.at("c"));
        if (j.contains("tol")) pair.tol = j.at("tol").get<double>();
      } else if (use_canonical) {
        pair = canonical_pair(ps_n, ps_nu);
      } else if (!use_identity) {
        throw Error(ErrorCode::ConfigError, "need --identity, --canonical or --pair-file");
      }
      auto result = synth_commuting_path(pair, ps_grid);
      auto canon = canonical_pair(pair.n(), result.nu);
      double end_err = std::max(max_abs(result.alpha.values.back() - canon.a),
                                max_abs(result.gamma.values.back() - canon.c));
      double comm = path_commutator_residual(result.alpha, result.gamma);
      if (ps_json) {
        Json j;
        j["n"] = pair.n();
        j["nu"] = result.nu;
        j["endpoint_error"] = end_err;
        j["commutator_residual"] = comm;
        j["samples"] = result.alpha.sample_count();
        j["lipschitz_alpha"] = result.alpha.lipschitz;
        j["alpha_end"] = matrix_to_json(result.alpha.values.back());
        j["gamma_end"] = matrix_to_json(result.gamma.values.back());
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "nu = " << result.nu << "\n"
                  << "endpoint error = " << end_err << "\n"
                  << "commutator residual = " << comm << "\n";
      }
      return 0;
    }

    if (*scan) {
      PolySystem sys = family_catalog(resolve_family(sf));
      auto report = smoothness_scan(sys, scan_samples, static_cast<std::uint64_t>(scan_seed),
                                    sigma_threshold, scan_threads);
      Json j = Json::object();
      j["samples_requested"] = report.samples_requested;
      j["samples_converged"] = report.samples_converged;
      j["min_singular_value"] = report.min_singular_value;
      j["failures"] = report.failures.size();
      j["branch_point_off_zero_set"] = report.branch_point_off_zero_set;
      if (scan_json) {
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "converged " << report.samples_converged << "/" << report.samples_requested
                  << ", min sigma " << report.min_singular_value << ", flagged "
                  << report.failures.size() << "\n";
      }
      write_output(j, scan_out);
      return report.failures.empty() ? 0 : 1;
    }

    if (*twist) {
      auto profile = twist_profile(tw_n);
      int sign = collar_commutator_class(profile, tw_grid);
      const int shown = 9;
      Json samples_json = Json::array();
      for (int k = 0; k < shown; ++k) {
        double t = 1.0 + 3.0 * k / (shown - 1);
        Matrix rk = profile.rho_k(t), ri = profile.rho_i(t);
        Matrix comm = rk * ri * rk.transpose() * ri.transpose();
        if (tw_json) {
          Json rec;
          rec["t"] = t;
          rec["commutator"] = matrix_to_json(comm);
          samples_json.push_back(rec);
        } else {
          std::cout << "t = " << t << "\n" << comm << "\n";
        }
      }
      if (tw_json) {
        Json j;
        j["n"] = tw_n;
        j["grid"] = tw_grid;
        j["loop_samples_shown"] = samples_json;
        j["class_sign"] = sign;
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "collar commutator class sign: " << sign << "\n";
      }
      return 0;
    }

    if (*parity) {
      std::vector<int> n_tuple = parse_csv_ints(parity_n);
      std::vector<std::vector<int>> d_rows;
      std::stringstream ss(parity_d);
      std::string row;
      while (std::getline(ss, row, ';')) d_rows.push_back(parse_csv_ints(row));
      auto feasible = parity_condition(n_tuple, d_rows);
      if (parity_json) {
        Json j;
        j["feasible_indices"] = feasible;
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "feasible indices: [";
        for (std::size_t i = 0; i < feasible.size(); ++i) {
          std::cout << feasible[i] << (i + 1 < feasible.size() ? ", " : "");
        }
        std::cout << "]\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

// Acceptance suite: one pass/fail line per criterion, exit code equals the
// number of failed criteria.

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <twistlab/pipeline.hpp>

#include "test_helpers.hpp"

using namespace twistlab;
using namespace twistlab::testing;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream note;
};

#define REQUIRE_THAT(cond, msg)                          \
  do {                                                   \
    if (!(cond)) {                                       \
      out.ok = false;                                    \
      out.note << " [" << (msg) << "]";                  \
    }                                                    \
  } while (0)

// 1. quaternion witness: exactly -1, zero tolerance
Outcome criterion_quaternion_witness() {
  Outcome out;
  Quaternion w = quaternion_commutator_witness();
  REQUIRE_THAT(w.w == -1.0 && w.x == 0.0 && w.y == 0.0 && w.z == 0.0,
               "witness is not exactly -1");
  out.note << "witness = (" << w.w << ", " << w.x << ", " << w.y << ", " << w.z << ")";
  return out;
}

// 2. loop class for n in 3..8 at grid 2048, closure <= 1e-6; constant and
//    cancelling loops lift to +1
Outcome criterion_loop_class() {
  Outcome out;
  for (int n = 3; n <= 8; ++n) {
    auto loops = generator_loops(n, 2048);
    double closure = (loops.commutator.values.front() - loops.commutator.values.back()).norm();
    REQUIRE_THAT(closure <= 1e-6, "closure residual at n=" + std::to_string(n));
    int sign = lift_loop(loops.commutator);
    REQUIRE_THAT(sign == -1, "commutator class at n=" + std::to_string(n));

    SOLoop constant;
    constant.n = n;
    for (int m = 0; m <= 16; ++m) {
      constant.times.push_back(m / 16.0);
      constant.values.push_back(Matrix::Identity(n, n));
    }
    REQUIRE_THAT(lift_loop(constant) == 1, "constant loop at n=" + std::to_string(n));

    auto cancel = concatenate_loops(loops.commutator, reverse_loop(loops.commutator));
    REQUIRE_THAT(lift_loop(cancel) == 1, "loop * reverse at n=" + std::to_string(n));
  }
  out.note << "sign -1 for n in 3..8, +1 for constant and cancelling loops";
  return out;
}

// 3. path synthesis on 100 random commuting pairs per n in 3..6
Outcome criterion_path_synthesis() {
  Outcome out;
  Rng rng(2026);
  double worst_end = 0.0, worst_comm = 0.0;
  std::vector<CommutingPair> pool;
  for (int n = 3; n <= 6; ++n) {
    for (int trial = 0; trial < 100; ++trial) {
      auto pair = random_polynomial_pair(rng, n);
      if (pool.size() < 40) pool.push_back(pair);
      auto synth = synth_commuting_path(pair, 1024);
      auto canon = canonical_pair(n, synth.nu);
      double end_err = std::max(max_abs(synth.alpha.values.back() - canon.a),
                                max_abs(synth.gamma.values.back() - canon.c));
      double comm = path_commutator_residual(synth.alpha, synth.gamma);
      worst_end = std::max(worst_end, end_err);
      worst_comm = std::max(worst_comm, comm);
      REQUIRE_THAT(end_err <= 1e-8, "endpoint error at n=" + std::to_string(n));
      REQUIRE_THAT(comm <= 1e-8, "commutator residual at n=" + std::to_string(n));
      for (int s = 0; s < synth.alpha.sample_count(); ++s) {
        if (synth.alpha.values[s].determinant() <= 0.0 ||
            synth.gamma.values[s].determinant() <= 0.0) {
          REQUIRE_THAT(false, "determinant positivity at n=" + std::to_string(n));
          break;
        }
      }
    }
  }
  for (int conj = 0; conj < 50; ++conj) {
    const auto& pair = pool[conj % pool.size()];
    int nu = negative_parity(pair);
    Matrix b = random_gl_plus(rng, pair.n());
    Matrix b_inv = b.partialPivLu().inverse();
    CommutingPair moved{b_inv * pair.a * b, b_inv * pair.c * b, 1e-8};
    REQUIRE_THAT(negative_parity(moved) == nu, "conjugation invariance of the parity");
  }
  out.note << "worst endpoint " << worst_end << ", worst commutator " << worst_comm;
  return out;
}

// 4. flow identities: Jacobian composition within 1e-4, far-field
//    agreement within 1e-9 at 1000 points
Outcome criterion_flow_identities() {
  Outcome out;
  Rng rng(11);
  double worst_jac = 0.0, worst_far = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    int n = 3 + trial % 3;
    Matrix l = random_gl_plus(rng, n);
    double amp = 0.02;
    auto fwd = [l, amp, n](const Vector& v) {
      Vector q(n);
      for (int i = 0; i < n; ++i) q[i] = v[i] * v[(i + 1) % n];
      return Vector(l * v + amp * q);
    };
    auto jac = [l, amp, n](const Vector& v) {
      Matrix j = l;
      for (int i = 0; i < n; ++i) {
        j(i, i) += amp * v[(i + 1) % n];
        j(i, (i + 1) % n) += amp * v[i];
      }
      return j;
    };
    NumericDiffeo f = make_diffeo(n, fwd, jac);
    Matrix s = random_matrix(rng, n);
    s = 0.5 * (s - s.transpose().eval());
    s *= 1.5 / s.norm();
    auto rho = [s](double t) { return Matrix((t * s).exp()); };
    double t = rng.uniform(0.1, 1.0);

    auto composite = [&](const Vector& v) { return deform_by_flow(f, rho, t, v); };
    Matrix j_fd = finite_difference_jacobian(composite, Vector::Zero(n));
    double jac_err = max_abs(j_fd - f.jacobian_at(Vector::Zero(n)) * rho(t));
    worst_jac = std::max(worst_jac, jac_err);
    REQUIRE_THAT(jac_err <= 1e-4, "flow Jacobian identity");

    for (int pt = 0; pt < 50; ++pt) {
      Vector dir(n);
      for (int i = 0; i < n; ++i) dir[i] = rng.gauss();
      dir.normalize();
      Vector v = rng.uniform(2.0, 2.999) * dir;
      double err = (composite(v) - f.forward(v)).norm();
      worst_far = std::max(worst_far, err);
      REQUIRE_THAT(err <= 1e-9, "far-field agreement");
    }
  }
  out.note << "worst Jacobian error " << worst_jac << ", worst far-field " << worst_far;
  return out;
}

// 5. collar maps: exact identity on the inner annulus, class -1 for n in 3..8
Outcome criterion_collar_chain() {
  Outcome out;
  Rng rng(5);
  for (int n = 3; n <= 8; ++n) {
    auto profile = twist_profile(n);
    auto maps = collar_maps(profile);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      Vector dir(n);
      for (int i = 0; i < n; ++i) dir[i] = rng.gauss();
      dir.normalize();
      Vector v = rng.uniform(1.0, 2.0) * dir;
      worst = std::max(worst, (maps.a.forward(v) - v).norm());
      worst = std::max(worst, (maps.c.forward(v) - v).norm());
    }
    REQUIRE_THAT(worst == 0.0, "inner annulus identity at n=" + std::to_string(n));
    REQUIRE_THAT(collar_commutator_class(profile, 2048) == -1,
                 "collar class at n=" + std::to_string(n));
  }
  out.note << "identity exact on 1000 samples per n, class -1 for n in 3..8";
  return out;
}

// 6. witness identity over all degree tuples with entries 1..5, m <= 3,
//    n <= 6; a corrupted witness returns false
Outcome criterion_witness_identity() {
  Outcome out;
  int checked = 0;
  std::function<void(std::vector<int>&, int)> enumerate = [&](std::vector<int>& d, int m) {
    if (static_cast<int>(d.size()) == m) {
      for (int n = m + 1; n <= 6; ++n) {
        ++checked;
        if (!kronecker_witness_check(d, n)) {
          REQUIRE_THAT(false, "witness failed for a degree tuple at n=" + std::to_string(n));
        }
      }
      return;
    }
    for (int v = 1; v <= 5; ++v) {
      d.push_back(v);
      enumerate(d, m);
      d.pop_back();
    }
  };
  for (int m = 1; m <= 3; ++m) {
    std::vector<int> d;
    enumerate(d, m);
  }
  auto corrupted = make_system({parse_poly("z0^2", {3})});
  REQUIRE_THAT(!witness_rows_check(corrupted), "corrupted witness not detected");
  out.note << checked << " exact cases, corrupted witness rejected";
  return out;
}

PipelineConfig k3_acceptance_config() {
  PipelineConfig config;
  config.family.name = "Xd";
  config.family.int_params = {4, 3};
  config.n_samples = 10000;
  config.seed = 0;
  config.grid = 2048;
  return config;
}

// 7. end-to-end chain on the quartic surface with 10^4 smoothness samples
Outcome criterion_k3_end_to_end(VerificationReport& stored) {
  Outcome out;
  stored = run_verify_family(k3_acceptance_config());
  REQUIRE_THAT(stored.verdict == "pass", "verdict");
  auto find = [&](const std::string& name) -> const StageRecord& {
    for (const auto& s : stored.stages)
      if (s.name == name) return s;
    static StageRecord missing;
    return missing;
  };
  const auto& scan = find("smoothness_scan");
  double min_sigma = scan.details.value("min_singular_value", 0.0);
  REQUIRE_THAT(min_sigma > 1e-3, "min singular value");
  REQUIRE_THAT(scan.details.value("samples_converged", 0) > 9000, "convergent sample count");
  REQUIRE_THAT(find("invariance_check").details.value("coefficient_identities_exact", false),
               "exact invariance identities");
  const auto& action = find("local_action_check");
  REQUIRE_THAT(action.details.value("res_a", 1.0) <= 1e-8 &&
                   action.details.value("res_c", 1.0) <= 1e-8,
               "chart residuals");
  const auto& diff = find("differentials_at_fixed_point");
  Vector da_diag(4), dc_diag(4);
  da_diag << -1, -1, 1, 1;
  dc_diag << 1, -1, 1, -1;
  REQUIRE_THAT(max_abs(matrix_from_json(diff.details.at("da")) -
                       Matrix(da_diag.asDiagonal())) == 0.0,
               "antipodal differential");
  REQUIRE_THAT(max_abs(matrix_from_json(diff.details.at("dc")) -
                       Matrix(dc_diag.asDiagonal())) == 0.0,
               "conjugation differential");
  REQUIRE_THAT(find("negative_parity").details.value("nu", -1) == 1, "nu = 1");
  REQUIRE_THAT(find("spin_obstruction_of_pair").details.value("lift_sign", 0) == -1,
               "spin sign -1");
  out.note << "verdict pass, min sigma " << min_sigma << ", nu 1, spin -1";
  return out;
}

// 8. parity condition against a direct exhaustive evaluation
Outcome criterion_parity_exhaustive() {
  Outcome out;
  long long cases = 0;
  for (int nu = 0; nu <= 2; ++nu) {
    int factors = nu + 1;
    std::vector<int> n_tuple(factors, 1);
    for (;;) {  // enumerate n_f in {1,2,3}^factors
      int n = 0;
      for (int nf : n_tuple) n += nf;
      for (int m = 1; m <= 3; ++m) {
        if (m >= n) continue;
        int digits = m * factors;
        long long total = 1;
        for (int k = 0; k < digits; ++k) total *= 4;
        for (long long code = 0; code < total; ++code) {
          std::vector<std::vector<int>> d(m, std::vector<int>(factors));
          long long rest = code;
          for (int r = 0; r < m; ++r) {
            for (int c = 0; c < factors; ++c) {
              d[r][c] = 1 + static_cast<int>(rest % 4);
              rest /= 4;
            }
          }
          auto fast = parity_condition(n_tuple, d);
          // direct evaluation of the displayed condition
          std::vector<int> slow;
          for (int i = 0; i < factors; ++i) {
            int odd = 0;
            for (int r = 0; r < m; ++r)
              if (d[r][i] % 2 == 1) ++odd;
            bool cond = (odd == 0) || (m - 2 * odd >= n - 2 * n_tuple[i]);
            if (cond && odd < n_tuple[i]) slow.push_back(i);
          }
          ++cases;
          if (fast != slow) {
            REQUIRE_THAT(false, "mismatch in a parity case");
            return out;
          }
        }
      }
      int pos = 0;
      while (pos < factors && n_tuple[pos] == 3) n_tuple[pos++] = 1;
      if (pos == factors) break;
      ++n_tuple[pos];
    }
  }
  out.note << cases << " exhaustive cases agree";
  return out;
}

// 9. orientation parity of the conjugation differential
Outcome criterion_orientation_parity() {
  Outcome out;
  for (auto [d, n, expect] : {std::tuple<int, int, double>{2, 3, 1.0},
                              {4, 3, 1.0},
                              {2, 4, -1.0},
                              {3, 4, -1.0}}) {
    auto diff = differentials_at_fixed_point(family_Xd(d, n));
    REQUIRE_THAT(diff.det_dc == expect,
                 "det(dc) for d=" + std::to_string(d) + ", n=" + std::to_string(n));
  }
  out.note << "det(dc) = +1 for even complex dimension, -1 for odd";
  return out;
}

// 10. byte-identical reports across two runs with the same seed
Outcome criterion_determinism(const VerificationReport& first) {
  Outcome out;
  auto second = run_verify_family(k3_acceptance_config());
  std::string a = first.to_json().dump(2);
  std::string b = second.to_json().dump(2);
  REQUIRE_THAT(a == b, "reports differ");
  out.note << "two runs produced " << a.size() << " identical bytes";
  return out;
}

}  // namespace

int main() {
  int failures = 0;
  VerificationReport k3_report;

  struct Entry {
    int id;
    std::string label;
    std::function<Outcome()> run;
    double budget_seconds;  // 0 = no explicit budget
  };
  std::vector<Entry> entries = {
      {1, "quaternion commutator witness", criterion_quaternion_witness, 0},
      {2, "generator commutator loop class", criterion_loop_class, 30},
      {3, "commuting path synthesis", criterion_path_synthesis, 0},
      {4, "cutoff flow identities", criterion_flow_identities, 0},
      {5, "collar chain", criterion_collar_chain, 0},
      {6, "witness identity", criterion_witness_identity, 0},
      {7, "end-to-end quartic chain", [&] { return criterion_k3_end_to_end(k3_report); }, 120},
      {8, "multidegree parity condition", criterion_parity_exhaustive, 0},
      {9, "orientation parity", criterion_orientation_parity, 0},
      {10, "report determinism", [&] { return criterion_determinism(k3_report); }, 0},
  };

  for (auto& e : entries) {
    auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = e.run();
    } catch (const std::exception& ex) {
      out.ok = false;
      out.note << " [exception: " << ex.what() << "]";
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (e.budget_seconds > 0 && elapsed > e.budget_seconds) {
      out.ok = false;
      out.note << " [runtime " << elapsed << "s exceeds " << e.budget_seconds << "s]";
    }
    if (!out.ok) ++failures;
    std::cout << (out.ok ? "PASS" : "FAIL") << " criterion " << e.id << " (" << std::fixed
              << std::setprecision(2) << elapsed << "s): " << e.label << " -- "
              << out.note.str() << "\n"
              << std::defaultfloat;
  }
  std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : "CRITERIA FAILED") << " (" << failures
            << " failures)\n";
  return failures;
}

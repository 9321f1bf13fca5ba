#include <catch2/catch_amalgamated.hpp>
#include <twistlab/linalg_paths.hpp>

#include "test_helpers.hpp"

using namespace twistlab;
using namespace twistlab::testing;

namespace {

CommutingPair canonical_extended(int n) {  // (r_k + I, r_i + I)
  return canonical_pair(n, 1);
}

}  // namespace

TEST_CASE("common_eigenstructure of the identity pair") {
  Matrix eye = Matrix::Identity(3, 3);
  auto es = common_eigenstructure({eye, eye, 1e-10});
  REQUIRE(es.blocks.size() == 1);
  CHECK(es.blocks[0].dim == 3);
  CHECK(std::abs(es.blocks[0].lambda_a - std::complex<double>(1, 0)) < 1e-12);
  CHECK(std::abs(es.blocks[0].lambda_c - std::complex<double>(1, 0)) < 1e-12);
}

TEST_CASE("common_eigenstructure of the canonical pair in dimension 4") {
  auto es = common_eigenstructure(canonical_extended(4));
  REQUIRE(es.blocks.size() == 4);
  std::vector<std::pair<int, int>> found;
  for (const auto& b : es.blocks) {
    CHECK(b.dim == 1);
    CHECK(std::abs(b.lambda_a.imag()) < 1e-12);
    CHECK(std::abs(b.lambda_c.imag()) < 1e-12);
    found.push_back({b.lambda_a.real() > 0 ? 1 : -1, b.lambda_c.real() > 0 ? 1 : -1});
  }
  std::sort(found.begin(), found.end());
  std::vector<std::pair<int, int>> expect = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  CHECK(found == expect);
}

TEST_CASE("common_eigenstructure of polynomials in a symmetric matrix") {
  Rng rng(5);
  Matrix m = random_matrix(rng, 5);
  m = 0.5 * (m + m.transpose().eval());
  Matrix eye = Matrix::Identity(5, 5);
  Matrix a = m * m + eye;                        // p(x) = x^2 + 1
  Matrix c = 2.0 * m * m + m + 3.0 * eye;        // q(x) = 2x^2 + x + 3
  auto es = common_eigenstructure({a, c, 1e-10});

  // oracle: eigendecompose m, map eigenvalues through p and q
  Eigen::SelfAdjointEigenSolver<Matrix> sa(m);
  for (int i = 0; i < 5; ++i) {
    double mu = sa.eigenvalues()(i);
    double pa = mu * mu + 1.0, qc = 2.0 * mu * mu + mu + 3.0;
    bool matched = false;
    for (const auto& b : es.blocks) {
      if (std::abs(b.lambda_a.real() - pa) < 1e-6 && std::abs(b.lambda_c.real() - qc) < 1e-6)
        matched = true;
    }
    CHECK(matched);
  }

  int total = 0;
  for (const auto& b : es.blocks) total += b.dim;
  CHECK(total == 5);
  CHECK(es.invariance_residual <= 1e-8 * std::max(max_abs(a), max_abs(c)));
}

TEST_CASE("block-diagonal reconstruction for semisimple inputs") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto pair = random_structured_pair(rng, 4 + trial % 3, trial % 2);
    auto es = common_eigenstructure(pair);
    Matrix v(pair.n(), pair.n());
    int off = 0;
    for (const auto& b : es.blocks) {
      v.block(0, off, pair.n(), b.dim) = b.basis;
      off += b.dim;
    }
    REQUIRE(off == pair.n());
    Matrix v_inv = v.partialPivLu().inverse();
    Matrix ta = v_inv * pair.a * v;
    Matrix tc = v_inv * pair.c * v;
    Matrix da = Matrix::Zero(pair.n(), pair.n()), dc = da;
    off = 0;
    for (const auto& b : es.blocks) {
      da.block(off, off, b.dim, b.dim) = ta.block(off, off, b.dim, b.dim);
      dc.block(off, off, b.dim, b.dim) = tc.block(off, off, b.dim, b.dim);
      off += b.dim;
    }
    CHECK(max_abs(v * da * v_inv - pair.a) < 1e-6);
    CHECK(max_abs(v * dc * v_inv - pair.c) < 1e-6);
  }
}

TEST_CASE("common_eigenstructure rejects non-commuting input") {
  Rng rng(23);
  Matrix a = random_gl_plus(rng, 3);
  Matrix c = random_gl_plus(rng, 3);
  if (commutation_residual(a, c) < 1e-6) c(0, 1) += 0.5;
  CHECK_THROWS_MATCHES(common_eigenstructure({a, c, 1e-10}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::NonCommuting;
                       }));
}

TEST_CASE("negative parity examples") {
  Matrix eye3 = Matrix::Identity(3, 3);
  CHECK(negative_parity({eye3, eye3, 1e-10}) == 0);
  CHECK(negative_parity(canonical_extended(4)) == 1);
  CHECK(negative_parity({-eye3, -eye3, 1e-10}) == 1);
  Matrix m = Matrix::Identity(3, 3);
  m(0, 0) = -1;
  m(1, 1) = -1;
  CHECK(negative_parity({m, m, 1e-10}) == 0);
}

TEST_CASE("negative parity is conjugation invariant") {
  Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 3 + trial % 4;
    auto pair = random_structured_pair(rng, n, trial % 2);
    int nu = negative_parity(pair);
    for (int conj = 0; conj < 5; ++conj) {
      Matrix b = random_gl_plus(rng, n);
      Matrix b_inv = b.partialPivLu().inverse();
      CommutingPair moved{b_inv * pair.a * b, b_inv * pair.c * b, 1e-8};
      CHECK(negative_parity(moved) == nu);
    }
  }
}

TEST_CASE("canonical pair values") {
  auto p31 = canonical_pair(3, 1);
  Matrix a_expect(3, 3), c_expect(3, 3);
  a_expect << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  c_expect << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  CHECK(max_abs(p31.a - a_expect) == 0.0);
  CHECK(max_abs(p31.c - c_expect) == 0.0);

  auto p30 = canonical_pair(3, 0);
  CHECK(max_abs(p30.a - Matrix::Identity(3, 3)) == 0.0);
  CHECK(max_abs(p30.c - Matrix::Identity(3, 3)) == 0.0);

  auto p51 = canonical_pair(5, 1);
  Vector diag_a(5), diag_c(5);
  diag_a << -1, -1, 1, 1, 1;
  diag_c << 1, -1, -1, 1, 1;
  CHECK(max_abs(p51.a - Matrix(diag_a.asDiagonal())) == 0.0);
  CHECK(max_abs(p51.c - Matrix(diag_c.asDiagonal())) == 0.0);

  CHECK_THROWS_AS(canonical_pair(2, 1), Error);
}

TEST_CASE("synthesis is constant on canonical inputs") {
  for (int nu : {0, 1}) {
    auto pair = canonical_pair(4, nu);
    auto synth = synth_commuting_path(pair, 64);
    CHECK(synth.nu == nu);
    for (const auto& v : synth.alpha.values) CHECK(max_abs(v - pair.a) < 1e-12);
    for (const auto& v : synth.gamma.values) CHECK(max_abs(v - pair.c) < 1e-12);
  }
}

TEST_CASE("synthesis on random polynomial pairs") {
  Rng rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    int n = 3 + trial % 4;
    auto pair = random_polynomial_pair(rng, n);
    auto synth = synth_commuting_path(pair, 1000);
    int nu = negative_parity(pair);
    CHECK(synth.nu == nu);

    CHECK(max_abs(synth.alpha.values.front() - pair.a) < 1e-10);
    CHECK(max_abs(synth.gamma.values.front() - pair.c) < 1e-10);
    auto canon = canonical_pair(n, nu);
    CHECK(max_abs(synth.alpha.values.back() - canon.a) <= 1e-8);
    CHECK(max_abs(synth.gamma.values.back() - canon.c) <= 1e-8);

    CHECK(path_commutator_residual(synth.alpha, synth.gamma) < 1e-8);
    for (int m = 0; m < synth.alpha.sample_count(); ++m) {
      CHECK(synth.alpha.values[m].determinant() > 0.0);
      CHECK(synth.gamma.values[m].determinant() > 0.0);
      CHECK(commutation_residual(synth.alpha.values[m], synth.gamma.values[m]) <= 1e-8);
    }
  }
}

TEST_CASE("synthesis on structured pairs with rotation blocks") {
  Rng rng(37);
  for (int trial = 0; trial < 8; ++trial) {
    int n = 3 + trial % 5;
    auto pair = random_structured_pair(rng, n, trial % 2);
    auto synth = synth_commuting_path(pair, 512);
    auto canon = canonical_pair(n, synth.nu);
    CHECK(max_abs(synth.alpha.values.back() - canon.a) <= 1e-8);
    CHECK(max_abs(synth.gamma.values.back() - canon.c) <= 1e-8);
    CHECK(path_commutator_residual(synth.alpha, synth.gamma) < 1e-8);
  }
}

TEST_CASE("stage junctions are continuous") {
  // the smooth step is flat at 0 and 1, so evaluating just inside a stage
  // boundary must agree with the boundary value itself; this pins the
  // O-stage endpoint against the analytic canonical arrangement
  Rng rng(53);
  for (int trial = 0; trial < 6; ++trial) {
    int n = 3 + trial % 4;
    auto pair = trial % 2 == 0 ? random_polynomial_pair(rng, n)
                               : random_structured_pair(rng, n, 1);
    auto synth = synth_commuting_path(pair, 64);
    for (double junction : {0.25, 0.5, 0.75, 1.0}) {
      CHECK(max_abs(synth.alpha.eval(junction - 1e-6) - synth.alpha.eval(junction)) < 1e-9);
      CHECK(max_abs(synth.gamma.eval(junction - 1e-6) - synth.gamma.eval(junction)) < 1e-9);
    }
  }
}

TEST_CASE("sampled paths carry a valid continuity certificate") {
  Rng rng(41);
  auto pair = random_polynomial_pair(rng, 4);
  auto synth = synth_commuting_path(pair, 256);
  const auto& p = synth.alpha;
  REQUIRE(p.sample_count() == 257);
  CHECK(p.times.front() == 0.0);
  CHECK(p.times.back() == 1.0);
  for (int m = 0; m + 1 < p.sample_count(); ++m) {
    double dt = p.times[m + 1] - p.times[m];
    CHECK(dt > 0.0);
    CHECK((p.values[m + 1] - p.values[m]).norm() <= p.lipschitz * dt);
  }
  REQUIRE(p.stages.size() == 4);
  CHECK(p.stages[0].label == "S");
  CHECK(p.stages[1].label == "N");
  CHECK(p.stages[2].label == "O");
  CHECK(p.stages[3].label == "R");
}

TEST_CASE("path_commutator_residual basics") {
  auto eye_path = sample_path([](double) { return Matrix::Identity(3, 3); }, 0, 1, 16);
  CHECK(path_commutator_residual(eye_path, eye_path) == 0.0);

  auto rk_path = sample_path([](double t) { return rot_k(t, 3); }, 0, 1, 64);
  CHECK(path_commutator_residual(rk_path, rk_path) < 1e-12);

  auto coarse = sample_path([](double) { return Matrix::Identity(3, 3); }, 0, 1, 32);
  CHECK_THROWS_AS(path_commutator_residual(eye_path, coarse), Error);
}

TEST_CASE("grid and dimension preconditions") {
  auto pair = canonical_pair(3, 1);
  CHECK_THROWS_AS(synth_commuting_path(pair, 8), Error);
  Matrix eye2 = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(synth_commuting_path({eye2, eye2, 1e-10}, 64), Error);
}

TEST_CASE("cluster ambiguity is reported for borderline gaps") {
  // eigenvalue gap between tol/2 and tol: the two clusterings disagree
  Matrix a = Matrix::Identity(3, 3);
  a(1, 1) = 1.07;
  a(2, 2) = 2.0;
  CHECK_THROWS_MATCHES(common_eigenstructure({a, a, 1e-10}, 0.1), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::ClusterAmbiguity;
                       }));
  CHECK_NOTHROW(common_eigenstructure({a, a, 1e-10}, 0.01));
}

TEST_CASE("degenerate determinants raise PathDegenerate") {
  Matrix tiny = 1e-5 * Matrix::Identity(3, 3);  // det = 1e-15 < 1e-12
  CHECK_THROWS_MATCHES(synth_commuting_path({tiny, tiny, 1e-10}, 64), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::PathDegenerate;
                       }));
}

TEST_CASE("symplectic parity check") {
  Matrix eye4 = Matrix::Identity(4, 4);
  CHECK(symplectic_parity_check({eye4, eye4, 1e-10}));
  CHECK(symplectic_parity_check({-eye4, -eye4, 1e-10}));

  // rotation by pi in one symplectic plane of the standard form
  Matrix r = Matrix::Identity(4, 4);
  r(0, 0) = -1;
  r(2, 2) = -1;
  CHECK(symplectic_parity_check({r, r, 1e-10}));

  // a pair that does not preserve the form
  Matrix s = 2.0 * eye4;
  CHECK_THROWS_MATCHES(symplectic_parity_check({s, s, 1e-10}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::NotSymplectic;
                       }));
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "stefanlab/elliptic.hpp"

using namespace stefanlab;

namespace {

Mat diag2(double a, double b) {
  Mat M = Mat::Zero(2, 2);
  M(0, 0) = a;
  M(1, 1) = b;
  return M;
}

// admissible matrices K^{-1} I <= A <= K I: random interior draws plus
// rotated vertex draws (eigenvalues at the ends), which carry the extrema
std::vector<Mat> admissible_samples(int n, double K, int count, std::uint64_t seed) {
  std::vector<Mat> out;
  out.reserve(count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(1.0 / K, K);
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < count; ++k) {
    Mat D = Mat::Zero(n, n);
    const bool vertex = k % 2 == 0;
    for (int i = 0; i < n; ++i) D(i, i) = vertex ? (coin(rng) ? K : 1.0 / K) : U(rng);
    const Mat Q = random_orthogonal(n, rng());
    out.push_back(Q * D * Q.transpose());
  }
  return out;
}

}  // namespace

TEST_CASE("pucci_eval: closed-form values") {
  CHECK(pucci_eval(PucciSign::Plus, Mat::Zero(3, 3), 2.0) == 0.0);
  CHECK(pucci_eval(PucciSign::Minus, Mat::Zero(3, 3), 2.0) == 0.0);
  const Mat I3 = Mat::Identity(3, 3);
  CHECK(pucci_eval(PucciSign::Plus, I3, 2.0) == doctest::Approx(6.0));
  CHECK(pucci_eval(PucciSign::Minus, I3, 2.0) == doctest::Approx(1.5));
  const Mat M = diag2(1.0, -1.0);
  CHECK(pucci_eval(PucciSign::Plus, M, 2.0) == doctest::Approx(1.5));
  CHECK(pucci_eval(PucciSign::Minus, M, 2.0) == doctest::Approx(-1.5));
}

TEST_CASE("pucci_eval: rejects non-symmetric input") {
  Mat M = Mat::Zero(2, 2);
  M(0, 1) = 1.0;
  CHECK_THROWS(pucci_eval(PucciSign::Plus, M, 2.0));
}

TEST_CASE("pucci_eval: random-admissible-matrix oracle on diag(1,-1)") {
  const Mat M = diag2(1.0, -1.0);
  const double K = 2.0;
  double sup = -1e30, inf = 1e30;
  for (const Mat& A : admissible_samples(2, K, 100000, 71)) {
    const double v = (A * M).trace();
    sup = std::max(sup, v);
    inf = std::min(inf, v);
  }
  const double plus = pucci_eval(PucciSign::Plus, M, K);
  const double minus = pucci_eval(PucciSign::Minus, M, K);
  CHECK(plus >= sup - 1e-12);  // formula bounds every admissible sample
  CHECK(minus <= inf + 1e-12);
  CHECK(plus - sup <= 1e-3);
  CHECK(inf - minus <= 1e-3);
}

TEST_CASE("pucci invariants") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const double K = 1.0 + (rng() % 100) / 25.0;
    const Mat M = random_symmetric(n, rng());
    const Mat N = random_symmetric(n, rng());
    const Mat P = random_psd(n, rng());
    const double plusM = pucci_eval(PucciSign::Plus, M, K);
    const double minusM = pucci_eval(PucciSign::Minus, M, K);

    // duality and ordering
    CHECK(minusM == doctest::Approx(-pucci_eval(PucciSign::Plus, -M, K)).epsilon(1e-12));
    CHECK(minusM <= plusM + 1e-12);

    // positive homogeneity
    const double c = 0.25 + (rng() % 100) / 20.0;
    CHECK(pucci_eval(PucciSign::Plus, c * M, K) ==
          doctest::Approx(c * plusM).epsilon(1e-12));

    // rotation invariance
    const Mat Q = random_orthogonal(n, rng());
    CHECK(pucci_eval(PucciSign::Plus, Q.transpose() * M * Q, K) ==
          doctest::Approx(plusM).epsilon(1e-9));

    // sub/superadditivity
    CHECK(pucci_eval(PucciSign::Plus, M + N, K) <=
          plusM + pucci_eval(PucciSign::Plus, N, K) + 1e-9);
    CHECK(pucci_eval(PucciSign::Minus, M + N, K) >=
          minusM + pucci_eval(PucciSign::Minus, N, K) - 1e-9);

    // K-elliptic sandwich for every kind
    std::vector<EllipticOperatorSpec> specs(4);
    specs[0] = {OperatorKind::Trace, K, {}};
    specs[1] = {OperatorKind::PucciPlus, K, {}};
    specs[2] = {OperatorKind::PucciMinus, K, {}};
    specs[3].kind = OperatorKind::BellmanMin;
    specs[3].K = K;
    specs[3].bellman_matrices = {Mat::Identity(n, n) / K, Mat::Identity(n, n) * K};
    for (const auto& spec : specs) {
      const double inc = operator_eval(spec, M + P) - operator_eval(spec, M);
      CHECK(inc >= pucci_eval(PucciSign::Minus, P, K) - 1e-9);
      CHECK(inc <= pucci_eval(PucciSign::Plus, P, K) + 1e-9);
    }
  }
}

TEST_CASE("operator_eval: closed-form values and cross-checks") {
  EllipticOperatorSpec tr{OperatorKind::Trace, 1.0, {}};
  Mat D = Mat::Zero(3, 3);
  D(0, 0) = 1;
  D(1, 1) = 2;
  D(2, 2) = 3;
  CHECK(operator_eval(tr, D) == doctest::Approx(6.0));

  EllipticOperatorSpec bm;
  bm.kind = OperatorKind::BellmanMin;
  bm.K = 2.0;
  bm.bellman_matrices = {Mat::Identity(2, 2), 2.0 * Mat::Identity(2, 2)};
  CHECK(operator_eval(bm, -Mat::Identity(2, 2)) == doctest::Approx(-4.0));

  EllipticOperatorSpec pm{OperatorKind::PucciMinus, 3.0, {}};
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    const Mat M = random_symmetric(3, rng());
    CHECK(operator_eval(pm, M) ==
          doctest::Approx(pucci_eval(PucciSign::Minus, M, 3.0)).epsilon(1e-12));
  }

  EllipticOperatorSpec bad;
  bad.kind = OperatorKind::BellmanMin;
  bad.K = 2.0;
  CHECK_THROWS(operator_eval(bad, Mat::Identity(2, 2)));

  // F(0) = 0 for every kind
  CHECK(operator_eval(tr, Mat::Zero(3, 3)) == 0.0);
  CHECK(operator_eval(bm, Mat::Zero(2, 2)) == 0.0);
  CHECK(operator_eval(pm, Mat::Zero(3, 3)) == 0.0);
}

TEST_CASE("operator spec validation") {
  EllipticOperatorSpec bad{OperatorKind::Trace, 0.5, {}};
  CHECK_THROWS(bad.validate());
  EllipticOperatorSpec bm;
  bm.kind = OperatorKind::BellmanMin;
  bm.K = 2.0;
  bm.bellman_matrices = {3.0 * Mat::Identity(2, 2)};  // eigenvalues outside [1/K, K]
  CHECK_THROWS(bm.validate());
}

TEST_CASE("ellipticity_margin") {
  const int n = 3;
  SUBCASE("trace margins span [1, n]; passes with K = n") {
    EllipticOperatorSpec tr{OperatorKind::Trace, 1.0, {}};
    const auto m = ellipticity_margin(tr, n, 400, 31);
    CHECK(m.lower >= 1.0 - 1e-12);
    CHECK(m.upper <= n + 1e-12);
    CHECK_FALSE(m.passes(1.0));  // n > 1 spreads past [1, 1]
    CHECK(m.passes(static_cast<double>(n)));
  }
  SUBCASE("pucci operators fill the degenerate-elliptic band [1/K, nK]") {
    // under the largest-eigenvalue norm the upper Pucci increment reaches
    // K tr(N) <= n K |N|, so the admissible band scales with the dimension,
    // exactly as for the trace operator above
    for (auto kind : {OperatorKind::PucciPlus, OperatorKind::PucciMinus}) {
      EllipticOperatorSpec spec{kind, 2.0, {}};
      const auto m = ellipticity_margin(spec, n, 400, 77);
      CHECK(m.lower >= 1.0 / 2.0 - 1e-12);
      CHECK(m.upper <= n * 2.0 + 1e-12);
      CHECK(m.passes(n * 2.0));
    }
  }
  SUBCASE("single-matrix bellman") {
    const double K = 2.0;
    EllipticOperatorSpec bm;
    bm.kind = OperatorKind::BellmanMin;
    bm.K = K;
    bm.bellman_matrices = {Mat::Identity(n, n) / K};
    const auto m = ellipticity_margin(bm, n, 400, 99);
    CHECK(m.lower >= 1.0 / K - 1e-12);
    CHECK(m.upper <= n / K + 1e-12);
    CHECK(m.passes(K));
  }
}

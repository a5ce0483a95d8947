#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "capfirm/scenarios.hpp"
#include "oracles/oracles.hpp"

using namespace capfirm;

namespace {

Mat pearson(const Mat& x) {
  const Mat c = x.rowwise() - x.colwise().mean();
  const Mat cov = c.transpose() * c / static_cast<double>(x.rows() - 1);
  const Vec s = cov.diagonal().cwiseSqrt();
  return cov.array() / (s * s.transpose()).array();
}

// AR(1) errors across lead times so the correlation structure is known.
Mat ar_errors(int days, int T, double phi, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Mat z(days, T);
  for (int d = 0; d < days; ++d) {
    double v = N(rng);
    for (int k = 0; k < T; ++k) {
      if (k) v = phi * v + std::sqrt(1 - phi * phi) * N(rng);
      z(d, k) = sigma * v;
    }
  }
  return z;
}

// chi-square critical value, 19 degrees of freedom, upper tail 0.01
constexpr double kChi2Crit19 = 36.191;

}  // namespace

TEST_CASE("standard normal CDF matches numerical integration of the density") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
  for (double x = -8.0; x <= 8.0; x += 0.125)
    CHECK(std::abs(std_normal_cdf(x) - oracle::simpson_normal_cdf(x)) <= 1e-7);
}

TEST_CASE("normal quantile inverts the CDF") {
  CHECK(std_normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  for (double x = -6.0; x <= 6.0; x += 0.05) CHECK(std::abs(std_normal_quantile(std_normal_cdf(x)) - x) <= 1e-6);
  CHECK_THROWS_AS(std_normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(1.0), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(-0.1), DomainError);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(42, 0) == derive_seed(42, 0));
  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(derive_seed(42, 0) != derive_seed(43, 0));
}

TEST_CASE("empirical marginal quantile") {
  ErrorMarginal m;
  m.sorted = (Vec(4) << -2.0, 0.0, 1.0, 5.0).finished();
  CHECK(m.quantile(0.01) == -2.0);   // flat below the first order statistic at 0.125
  CHECK(m.quantile(0.99) == 5.0);    // flat above the last at 0.875
  CHECK(m.quantile(0.125) == doctest::Approx(-2.0));
  CHECK(m.quantile(0.375) == doctest::Approx(0.0));
  CHECK(m.quantile(0.25) == doctest::Approx(-1.0));
  CHECK(m.quantile(0.5) == doctest::Approx(0.5));
}

TEST_CASE("copula fit: independent lead times give small correlations") {
  const Mat z = ar_errors(200, 12, 0.0, 20.0, 3);
  const auto model = fit_copula(z, 466.4);
  CHECK(model.periods() == 12);
  // A sample correlation of independent series has standard deviation about
  // 1/sqrt(200) = 0.071, so a single pair exceeds 0.15 with probability ~3.4%:
  // the bound holds per pair, not for the maximum over all 66 pairs.
  int above = 0, pairs = 0;
  double sq = 0.0;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) {
      if (i == j) {
        CHECK(model.correlation(i, j) == doctest::Approx(1.0));
        continue;
      }
      if (j < i) continue;
      ++pairs;
      sq += model.correlation(i, j) * model.correlation(i, j);
      if (std::abs(model.correlation(i, j)) >= 0.15) ++above;
    }
  CHECK(pairs == 66);
  CHECK(above <= 6);
  CHECK(std::sqrt(sq / pairs) < 0.1);
  CHECK((model.cholesky * model.cholesky.transpose() - model.correlation).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("copula fit: perfect dependence and degenerate lead times") {
  Mat z = ar_errors(60, 6, 0.0, 30.0, 9);
  z.col(3) = z.col(2);
  z.col(0).setZero();
  z.col(5).setZero();
  const auto model = fit_copula(z, 466.4);
  CHECK(model.correlation(2, 3) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(model.marginals[0].degenerate);
  CHECK(model.marginals[5].degenerate);
  CHECK_FALSE(model.marginals[1].degenerate);
  for (int k = 1; k < 6; ++k) {
    CHECK(model.correlation(0, k) == 0.0);
    CHECK(model.correlation(5, k - 1) == 0.0);
  }
  CHECK(model.correlation(0, 0) == 1.0);
  // the repaired matrix is a correlation matrix with a positive spectrum
  const Eigen::SelfAdjointEigenSolver<Mat> es(model.correlation);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK((model.correlation.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(model.correlation.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("copula fit errors") {
  CHECK_THROWS_AS(fit_copula(ar_errors(29, 4, 0.5, 1.0, 1), 466.4), DataError);
  Mat z = ar_errors(40, 4, 0.5, 1.0, 1);
  z(3, 2) = NAN;
  CHECK_THROWS_AS(fit_copula(z, 466.4), DataError);
}

TEST_CASE("correlation repair floors the spectrum") {
  Mat c(3, 3);
  c << 1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0;  // indefinite
  const Mat r = repair_correlation(c, 1e-8);
  const Eigen::SelfAdjointEigenSolver<Mat> es(r);
  CHECK(es.eigenvalues().minCoeff() >= 1e-8 * 0.5);
  CHECK((r.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("normal scores use mid-ranks") {
  Mat x(4, 1);
  x << 3.0, 1.0, 4.0, 2.0;
  const Mat s = normal_scores(x);
  CHECK(s(1, 0) == doctest::Approx(std_normal_quantile(0.125)));
  CHECK(s(2, 0) == doctest::Approx(std_normal_quantile(0.875)));
  CHECK(s(0, 0) == doctest::Approx(std_normal_quantile(0.625)));
}

TEST_CASE("scenario sampling") {
  const Mat z = ar_errors(100, 8, 0.7, 40.0, 5);
  const auto model = fit_copula(z, 466.4);
  const Vec forecast = Vec::LinSpaced(8, 0.0, 466.4);

  SUBCASE("values stay within [0, Pc] with equal weights summing to one") {
    const auto set = sample_scenarios(model, forecast, 20, 42, 466.4);
    CHECK(set.count() == 20);
    CHECK(set.periods() == 8);
    CHECK(set.values.minCoeff() >= 0.0);
    CHECK(set.values.maxCoeff() <= 466.4);
    CHECK(set.weights.sum() == 1.0);
    CHECK((set.weights.array() == 1.0 / 20.0).all());
  }
  SUBCASE("bit-identical for equal seeds, different otherwise") {
    const auto a = sample_scenarios(model, forecast, 5, 99, 466.4);
    const auto b = sample_scenarios(model, forecast, 5, 99, 466.4);
    const auto c = sample_scenarios(model, forecast, 5, 100, 466.4);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    const auto one = sample_scenarios(model, forecast, 1, 7, 466.4);
    CHECK(one.values == sample_scenarios(model, forecast, 1, 7, 466.4).values);
    // scenario k of a larger draw is the same stream
    CHECK(a.values.row(0) == sample_scenarios(model, forecast, 1, 99, 466.4).values.row(0));
  }
  SUBCASE("point-mass marginals reproduce the clipped forecast") {
    const auto flat = fit_copula(Mat::Zero(40, 8), 466.4);
    const Vec f = Vec::LinSpaced(8, -10.0, 500.0);
    const auto set = sample_scenarios(flat, f, 4, 1, 466.4);
    for (int w = 0; w < 4; ++w)
      for (int k = 0; k < 8; ++k) CHECK(set.values(w, k) == std::clamp(f(k), 0.0, 466.4));
  }
  CHECK_THROWS_AS(sample_scenarios(model, forecast, 0, 1, 466.4), DomainError);
  CHECK_THROWS_AS(sample_scenarios(model, Vec::Zero(3), 2, 1, 466.4), ShapeError);
}

TEST_CASE("sampled errors reproduce the marginal spread") {
  const double sigma = 25.0;
  const Mat z = ar_errors(2000, 4, 0.0, sigma, 17);
  const auto model = fit_copula(z, 466.4);
  const Vec forecast = Vec::Constant(4, 233.0);  // far from both clip limits
  const auto set = sample_scenarios(model, forecast, 10000, 3, 466.4);
  for (int k = 0; k < 4; ++k) {
    const Vec e = set.values.col(k).array() - 233.0;
    const double sd = std::sqrt((e.array() - e.mean()).square().sum() / (e.size() - 1));
    CHECK(std::abs(sd - sigma) / sigma < 0.05);
  }
}

TEST_CASE("generated normal scores reproduce the fitted correlation") {
  const Mat z = ar_errors(300, 10, 0.8, 30.0, 21);
  const auto model = fit_copula(z, 466.4);
  const Mat g = sample_copula(model, 10000, 8);
  CHECK((pearson(g) - model.correlation).cwiseAbs().maxCoeff() <= 0.05);
  // uniform ranks per lead time
  for (int k = 0; k < 10; ++k) {
    std::vector<int> bins(20, 0);
    for (int r = 0; r < g.rows(); ++r) ++bins[std::min(19, static_cast<int>(std_normal_cdf(g(r, k)) * 20.0))];
    double chi2 = 0.0;
    for (int b : bins) chi2 += (b - 500.0) * (b - 500.0) / 500.0;
    CHECK(chi2 < kChi2Crit19);
  }
  CHECK(sample_copula(model, 50, 8) == sample_copula(model, 50, 8));
}

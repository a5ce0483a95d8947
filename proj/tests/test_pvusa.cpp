#include <doctest.h>

#include <cmath>
#include <random>

#include "capfirm/pvusa.hpp"
#include "capfirm/timeutil.hpp"

using namespace capfirm;

namespace {

// Clear-sky-shaped weather with passing clouds and a diurnal temperature swing.
struct Generated {
  WeatherSeries weather;
  Vec power;
};

Generated generate(int days, double noise_kw, std::uint64_t seed, double dt_hours = 0.25) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.3, 1.0);
  const auto start = parse_timestamp("2019-06-01T00:00:00Z");
  const int per_day = static_cast<int>(std::lround(24.0 / dt_hours));
  const int n = days * per_day;
  Generated g;
  g.weather.irradiance.resize(n);
  g.weather.temperature.resize(n);
  g.power.resize(n);
  double cloud = 0.8;
  for (int k = 0; k < n; ++k) {
    const auto ts = start + std::chrono::seconds(static_cast<long>(k * dt_hours * 3600.0));
    g.weather.time.push_back(ts);
    cloud = std::clamp(0.8 * cloud + 0.2 * U(rng), 0.0, 1.0);
    const double irr = clear_sky_irradiance(50.58, ts, 5.56) * cloud;
    const double hour = seconds_of_day(ts) / 3600.0;
    const double temp = 15.0 + 8.0 * std::cos(2.0 * M_PI * (hour - 15.0) / 24.0) + 2.0 * N(rng);
    g.weather.irradiance(k) = irr;
    g.weather.temperature(k) = temp;
    g.power(k) = pvusa_eval(kLiegeParams, irr, temp) + (irr > 5.0 ? noise_kw * N(rng) : 0.0);
  }
  return g;
}

double rel(double est, double truth) { return std::abs(est - truth) / std::abs(truth); }

}  // namespace

TEST_CASE("PVUSA evaluation") {
  CHECK(pvusa_eval(kLiegeParams, 0.0, 35.0) == 0.0);
  CHECK(pvusa_eval(PvusaParams{1, -1, -1}, 0.0, -5.0) == 0.0);
  CHECK(pvusa_eval(kLiegeParams, 800.0, 20.0) == doctest::Approx(379.488).epsilon(1e-12));
  CHECK(pvusa_eval(kLiegeParams, 1000.0, 25.0) == doctest::Approx(449.7).epsilon(1e-12));
  CHECK(pvusa_eval(kLiegeParams, 1000.0, 25.0, 400.0) == 400.0);
  CHECK(pvusa_eval(PvusaParams{-1, 0, 0}, 100.0, 20.0, 400.0) == 0.0);
  CHECK_THROWS_AS(pvusa_eval(kLiegeParams, -1.0, 20.0), DomainError);
  const Vec irr = Vec::LinSpaced(5, 0, 1000), temp = Vec::Constant(5, 20);
  const Vec out = pvusa_eval(kLiegeParams, irr, temp, 466.4);
  for (int k = 0; k < 5; ++k) CHECK(out(k) == doctest::Approx(std::clamp(pvusa_eval(kLiegeParams, irr(k), 20.0), 0.0, 466.4)));
  CHECK(kLiegeParams.sign_valid());
}

TEST_CASE("PVUSA output is concave in irradiance for nonnegative temperature") {
  for (double temp : {0.0, 10.0, 30.0})
    for (double i = 10.0; i < 1200.0; i += 50.0) {
      const double h = 5.0;
      const double second = pvusa_eval(kLiegeParams, i + h, temp) - 2 * pvusa_eval(kLiegeParams, i, temp) +
                            pvusa_eval(kLiegeParams, i - h, temp);
      CHECK(second < 0.0);
    }
}

TEST_CASE("noiseless fit recovers the generating parameters") {
  const auto g = generate(3, 0.0, 1);
  const auto fit = fit_pvusa(g.power, g.weather);
  REQUIRE(fit.final);
  CHECK(rel(fit.final->a, kLiegeParams.a) < 1e-6);
  CHECK(rel(fit.final->b, kLiegeParams.b) < 1e-6);
  CHECK(rel(fit.final->c, kLiegeParams.c) < 1e-6);
  for (const auto& e : fit.trajectory)
    if (e.status == PvusaWindowStatus::Fitted) CHECK(rel(e.params.a, kLiegeParams.a) < 1e-6);
  // residuals of an exact generator vanish
  const auto direct = fit_pvusa_samples(g.power, g.weather.irradiance, g.weather.temperature);
  REQUIRE(direct);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < g.power.size(); ++k)
    worst = std::max(worst, std::abs(pvusa_eval(*direct, g.weather.irradiance(k), g.weather.temperature(k)) - g.power(k)));
  CHECK(worst < 1e-8);
}

TEST_CASE("noisy fits converge as the noise shrinks") {
  double prev = INFINITY;
  for (double sigma : {0.01, 0.001, 0.0}) {
    const auto g = generate(60, sigma * 466.4, 11);
    const auto fit = fit_pvusa(g.power, g.weather);
    REQUIRE(fit.final);
    const double err = std::max({rel(fit.final->a, kLiegeParams.a), rel(fit.final->b, kLiegeParams.b),
                                 rel(fit.final->c, kLiegeParams.c)});
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("pooled least squares over two months is within a few percent at 1% noise") {
  // Root-mean-square error over independent replicates of the same experiment.
  double sq[3] = {0.0, 0.0, 0.0};
  const int reps = 12;
  for (int r = 0; r < reps; ++r) {
    const auto g = generate(60, 0.01 * 466.4, 100 + r);
    std::vector<Eigen::Index> day;
    for (Eigen::Index k = 0; k < g.power.size(); ++k)
      if (g.weather.irradiance(k) > 5.0) day.push_back(k);
    const Vec p = g.power(day), irr = g.weather.irradiance(day), temp = g.weather.temperature(day);
    const auto th = fit_pvusa_samples(p, irr, temp);
    REQUIRE(th);
    sq[0] += std::pow(rel(th->a, kLiegeParams.a), 2);
    sq[1] += std::pow(rel(th->b, kLiegeParams.b), 2);
    sq[2] += std::pow(rel(th->c, kLiegeParams.c), 2);
  }
  for (double v : sq) CHECK(std::sqrt(v / reps) < 0.05);
}

TEST_CASE("sign constraints hold on every fitted window") {
  auto g = generate(4, 0.03 * 466.4, 5);
  const auto fit = fit_pvusa(g.power, g.weather);
  for (const auto& e : fit.trajectory)
    if (e.status == PvusaWindowStatus::Fitted) {
      CHECK(e.params.a > 0.0);
      CHECK(e.params.b < 0.0);
      CHECK(e.params.c < 0.0);
    }
  // data that want a positive quadratic term end on the b < 0 boundary
  Vec irr = Vec::LinSpaced(50, 50, 1000), temp = Vec::Constant(50, 10.0);
  Vec p = (0.3 * irr.array() + 1e-4 * irr.array().square()).matrix();
  for (Eigen::Index k = 0; k < temp.size(); ++k) temp(k) += 3.0 * std::sin(0.7 * double(k));
  const auto th = fit_pvusa_samples(p, irr, temp);
  REQUIRE(th);
  CHECK(th->sign_valid());
}

TEST_CASE("all-night windows are skipped and keep the previous estimate") {
  auto g = generate(2, 0.0, 3);
  // blank out the second day entirely
  for (Eigen::Index k = 96; k < 192; ++k) {
    g.weather.irradiance(k) = 0.0;
    g.power(k) = 0.0;
  }
  const auto fit = fit_pvusa(g.power, g.weather);
  bool saw_skip = false;
  PvusaParams last{};
  bool have_last = false;
  for (const auto& e : fit.trajectory) {
    if (e.status == PvusaWindowStatus::Skipped && have_last) {
      saw_skip = true;
      CHECK(e.params.a == last.a);
      CHECK_FALSE(e.diagnostic.empty());
    }
    if (e.status == PvusaWindowStatus::Fitted) {
      last = e.params;
      have_last = true;
    }
  }
  CHECK(saw_skip);
}

TEST_CASE("rank-deficient windows are reported") {
  const Vec irr = Vec::Constant(10, 500.0), temp = Vec::Constant(10, 20.0);
  const Vec p = Vec::Constant(10, 200.0);
  CHECK_FALSE(fit_pvusa_samples(p, irr, temp).has_value());
  CHECK_THROWS_AS(fit_pvusa_samples(p, irr, Vec::Zero(3)), ShapeError);
}

TEST_CASE("clear-sky irradiance") {
  const auto noon_eq = parse_timestamp("2021-03-20T12:00:00Z");
  const double v = clear_sky_irradiance(0.0, noon_eq);
  CHECK(v >= 900.0);
  CHECK(v <= 1200.0);
  CHECK(clear_sky_irradiance(50.58, parse_timestamp("2021-03-20T00:00:00Z"), 5.56) == 0.0);
  CHECK(clear_sky_irradiance(50.58, parse_timestamp("2021-12-21T22:00:00Z"), 5.56) == 0.0);
  // rises monotonically through the morning to solar noon
  double prev = -1.0;
  for (int m = 4 * 60; m <= 11 * 60 + 30; m += 10) {
    const auto ts = parse_timestamp("2021-06-21T00:00:00Z") + std::chrono::minutes(m);
    const double x = clear_sky_irradiance(50.58, ts, 5.56);
    CHECK(x >= prev);
    CHECK(x >= 0.0);
    prev = x;
  }
}

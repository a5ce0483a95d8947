#include "capfirm/pvusa.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>

namespace capfirm {

void WeatherSeries::validate() const {
  if (temperature.size() != irradiance.size() ||
      static_cast<Eigen::Index>(time.size()) != irradiance.size())
    throw ShapeError("weather series: timestamps, irradiance and temperature lengths differ");
  if ((irradiance.array() < 0.0).any()) throw DataError("weather series: negative irradiance");
}

double pvusa_eval(const PvusaParams& p, double irradiance, double temperature, double capacity) {
  return std::clamp(pvusa_eval(p, irradiance, temperature), 0.0, capacity);
}

Vec pvusa_eval(const PvusaParams& p, const Vec& irradiance, const Vec& temperature,
               std::optional<double> capacity) {
  if (irradiance.size() != temperature.size()) throw ShapeError("pvusa_eval: length mismatch");
  if ((irradiance.array() < 0.0).any()) throw DomainError("pvusa_eval: negative irradiance");
  Vec out = p.a * irradiance.array() + p.b * irradiance.array().square() +
            p.c * irradiance.array() * temperature.array();
  if (capacity) out = out.cwiseMax(0.0).cwiseMin(*capacity);
  return out;
}

namespace {

// Closed bounds standing in for the strict sign constraints.
constexpr double kBound[3] = {1e-12, -1e-15, -1e-15};
constexpr bool kLower[3] = {true, false, false};

}  // namespace

std::optional<PvusaParams> fit_pvusa_samples(const Vec& power, const Vec& irradiance,
                                             const Vec& temperature) {
  const Eigen::Index n = power.size();
  if (irradiance.size() != n || temperature.size() != n)
    throw ShapeError("fit_pvusa: series lengths differ");
  if (n < 3) return std::nullopt;

  Eigen::MatrixX3d X(n, 3);
  X.col(0) = irradiance;
  X.col(1) = irradiance.array().square();
  X.col(2) = irradiance.array() * temperature.array();
  Eigen::Vector3d scale = X.colwise().norm();
  if ((scale.array() <= 0.0).any()) return std::nullopt;
  const Eigen::MatrixX3d Xs = X * scale.cwiseInverse().asDiagonal();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> full(Xs);
  full.setThreshold(1e-10);
  if (full.rank() < 3) return std::nullopt;

  double best_rss = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  // Enumerate which sign constraints are active; each face is an unconstrained LS.
  for (int pinned = 0; pinned < 8; ++pinned) {
    Vec y = power;
    std::vector<int> free;
    Eigen::Vector3d theta;
    for (int j = 0; j < 3; ++j) {
      if (pinned & (1 << j)) {
        theta(j) = kBound[j];
        y -= X.col(j) * kBound[j];
      } else {
        free.push_back(j);
      }
    }
    if (!free.empty()) {
      Eigen::MatrixXd Xf(n, Eigen::Index(free.size()));
      for (std::size_t k = 0; k < free.size(); ++k) Xf.col(Eigen::Index(k)) = Xs.col(free[k]);
      const Vec sol = Xf.colPivHouseholderQr().solve(y);
      bool feasible = true;
      for (std::size_t k = 0; k < free.size(); ++k) {
        const int j = free[k];
        theta(j) = sol(Eigen::Index(k)) / scale(j);
        feasible &= kLower[j] ? theta(j) >= kBound[j] : theta(j) <= kBound[j];
      }
      if (!feasible) continue;
    }
    const double rss = (power - X * theta).squaredNorm();
    if (rss < best_rss) {
      best_rss = rss;
      best = theta;
    }
  }
  return PvusaParams{best(0), best(1), best(2)};
}

PvusaFit fit_pvusa(const Vec& power, const WeatherSeries& weather, const PvusaFitOptions& options) {
  weather.validate();
  if (power.size() != weather.size()) throw ShapeError("fit_pvusa: power and weather lengths differ");
  if (!(options.window_hours > 0.0) || !(options.step_hours > 0.0))
    throw ConfigError("fit_pvusa: window and step must be positive");

  PvusaFit fit;
  if (weather.time.empty()) return fit;
  for (std::size_t k = 1; k < weather.time.size(); ++k)
    if (weather.time[k] <= weather.time[k - 1]) throw DataError("fit_pvusa: timestamps not increasing");

  using std::chrono::seconds;
  const seconds window{static_cast<long>(std::lround(options.window_hours * 3600.0))};
  const seconds step{static_cast<long>(std::lround(options.step_hours * 3600.0))};
  std::optional<PvusaParams> previous;

  std::size_t lo = 0;
  std::size_t hi = 0;  // samples in [lo, hi) belong to the current window
  const Timestamp first_end = std::min(weather.time.front() + window, weather.time.back());
  for (Timestamp end = first_end; end <= weather.time.back(); end += step) {
    while (hi < weather.time.size() && weather.time[hi] <= end) ++hi;
    while (lo < hi && weather.time[lo] <= end - window) ++lo;

    std::vector<Eigen::Index> idx;
    for (std::size_t k = lo; k < hi; ++k)
      if (weather.irradiance(Eigen::Index(k)) > options.irradiance_threshold &&
          std::isfinite(power(Eigen::Index(k))) &&
          std::isfinite(weather.temperature(Eigen::Index(k))))
        idx.push_back(Eigen::Index(k));

    PvusaEstimate est;
    est.window_end = end;
    est.samples = static_cast<int>(idx.size());
    if (previous) est.params = *previous;
    if (est.samples < options.min_samples) {
      est.status = PvusaWindowStatus::Skipped;
      est.diagnostic = "only " + std::to_string(est.samples) + " daytime samples";
      fit.trajectory.push_back(est);
      continue;
    }
    Vec p(idx.size()), irr(idx.size()), temp(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      p(Eigen::Index(k)) = power(idx[k]);
      irr(Eigen::Index(k)) = weather.irradiance(idx[k]);
      temp(Eigen::Index(k)) = weather.temperature(idx[k]);
    }
    if (auto theta = fit_pvusa_samples(p, irr, temp)) {
      est.params = *theta;
      est.status = PvusaWindowStatus::Fitted;
      previous = *theta;
      fit.final = *theta;
    } else {
      est.status = PvusaWindowStatus::RankDeficient;
      est.diagnostic = "design matrix rank < 3";
    }
    fit.trajectory.push_back(est);
  }
  return fit;
}

double solar_cos_zenith(double latitude_deg, Timestamp ts, double longitude_deg) {
  using std::numbers::pi;
  const double hour = seconds_of_day(ts) / 3600.0;
  const double gamma = 2.0 * pi / 365.0 * (day_of_year(ts) - 1 + (hour - 12.0) / 24.0);
  // Spencer series for declination and equation of time.
  const double decl = 0.006918 - 0.399912 * std::cos(gamma) + 0.070257 * std::sin(gamma) -
                      0.006758 * std::cos(2 * gamma) + 0.000907 * std::sin(2 * gamma) -
                      0.002697 * std::cos(3 * gamma) + 0.00148 * std::sin(3 * gamma);
  const double eqtime = 229.18 * (0.000075 + 0.001868 * std::cos(gamma) -
                                  0.032077 * std::sin(gamma) - 0.014615 * std::cos(2 * gamma) -
                                  0.040849 * std::sin(2 * gamma));
  const double solar_minutes = hour * 60.0 + eqtime + 4.0 * longitude_deg;
  const double hour_angle = (solar_minutes / 4.0 - 180.0) * pi / 180.0;
  const double lat = latitude_deg * pi / 180.0;
  return std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle);
}

double clear_sky_irradiance(double latitude_deg, Timestamp ts, double longitude_deg) {
  if (std::abs(latitude_deg) > 90.0) throw DomainError("clear_sky_irradiance: |latitude| > 90");
  const double cz = solar_cos_zenith(latitude_deg, ts, longitude_deg);
  if (cz <= 0.0) return 0.0;
  return 1098.0 * cz * std::exp(-0.057 / cz);
}

}  // namespace capfirm

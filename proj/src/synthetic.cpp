#include <cmath>
#include <numbers>

#include "capfirm/dataset.hpp"

namespace capfirm {

namespace {

/// Stationary AR(1) path of length n with mean mu, stationary std sd.
Vec ar1_path(Rng& rng, int n, double phi, double mu, double sd) {
  std::normal_distribution<double> normal;
  Vec x(n);
  double state = sd * normal(rng);
  const double innovation = sd * std::sqrt(std::max(0.0, 1.0 - phi * phi));
  for (int t = 0; t < n; ++t) {
    if (t > 0) state = phi * state + innovation * normal(rng);
    x(t) = mu + state;
  }
  return x;
}

double air_temperature(int day_of_year, double hour) {
  using std::numbers::pi;
  return 11.0 + 7.0 * std::cos(2.0 * pi * (day_of_year - 200) / 365.0) +
         4.0 * std::cos(2.0 * pi * (hour - 15.0) / 24.0);
}

}  // namespace

std::vector<DatasetDay> generate_synthetic_dataset(const SyntheticOptions& o) {
  if (o.days < 1) throw ConfigError("synthetic: at least one day required");
  if (!(o.pv_capacity > 0.0)) throw ConfigError("synthetic: PV capacity must be positive");
  if (o.cloud_std < 0.0 || o.forecast_std < 0.0) throw ConfigError("synthetic: negative noise level");
  if (!(std::abs(o.cloud_ar) < 1.0)) throw ConfigError("synthetic: AR coefficient must lie in (-1, 1)");
  const TimeGrid grid = TimeGrid::daily(o.dt_hours);
  const int T = grid.periods;
  const long step = std::lround(o.dt_hours * 3600.0);
  const auto start = day_of(parse_timestamp(o.start_date + "T00:00:00"));

  std::vector<DatasetDay> out;
  out.reserve(std::size_t(o.days));
  for (int i = 0; i < o.days; ++i) {
    DatasetDay d;
    d.date = start + std::chrono::days{i};
    Rng cloud_rng(derive_seed(o.seed, 2 * std::uint64_t(i)));
    Rng error_rng(derive_seed(o.seed, 2 * std::uint64_t(i) + 1));
    const Vec index = ar1_path(cloud_rng, T, o.cloud_ar, o.cloud_mean, o.cloud_std)
                          .cwiseMax(0.0)
                          .cwiseMin(1.05);
    const Vec error = ar1_path(error_rng, T, o.cloud_ar, 0.0, o.forecast_std);

    WeatherSeries w;
    w.irradiance.resize(T);
    w.temperature.resize(T);
    Vec clear(T);
    for (int t = 0; t < T; ++t) {
      const Timestamp ts = d.date + std::chrono::seconds(t * step);
      const Timestamp mid = ts + std::chrono::seconds(step / 2);
      w.time.push_back(ts);
      clear(t) = clear_sky_irradiance(o.latitude, mid, o.longitude);
      w.irradiance(t) = clear(t) * index(t);
      w.temperature(t) = air_temperature(day_of_year(mid), seconds_of_day(mid) / 3600.0);
    }
    d.measurements = pvusa_eval(o.params, w.irradiance, w.temperature, o.pv_capacity);
    const double peak = clear.maxCoeff();
    d.forecast = d.measurements;
    if (peak > 0.0) {
      const Vec shape = clear / peak;
      d.forecast = (d.measurements.array() +
                    o.pv_capacity * (o.forecast_bias + error.array()) * shape.array())
                       .cwiseMax(0.0)
                       .cwiseMin(o.pv_capacity)
                       .matrix();
      for (int t = 0; t < T; ++t)
        if (clear(t) <= 0.0) d.forecast(t) = d.measurements(t);
    }
    d.weather = std::move(w);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace capfirm

#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "capfirm/domain.hpp"
#include "capfirm/pvusa.hpp"
#include "capfirm/scenarios.hpp"

namespace capfirm {

/// One day of data on the planning grid.
struct DatasetDay {
  std::chrono::sys_days date;
  Vec measurements;  // kW
  Vec forecast;      // kW, point forecast issued the day before
  std::optional<WeatherSeries> weather;
  std::optional<ScenarioSet> scenarios;

  int periods() const { return static_cast<int>(measurements.size()); }
};

struct LoadOptions {
  int resample_minutes = 15;
  double max_missing_fraction = 0.10;
};

struct LoadResult {
  std::vector<DatasetDay> days;
  std::vector<std::string> diagnostics;
};

/// Reads `timestamp,pv_kw[,irradiance_wm2,temp_c][,forecast_kw]` (columns matched
/// by name), mean-resamples onto the grid, drops days with too many empty periods
/// and linearly interpolates the remaining gaps. Without a forecast column the
/// forecast equals the measurements.
LoadResult load_measurements(std::istream& in, const LoadOptions& options = {});
LoadResult load_measurements(const std::string& path, const LoadOptions& options = {});

/// Writes the day list in the format read by load_measurements.
void write_measurements(std::ostream& out, const std::vector<DatasetDay>& days, double dt_hours);

struct SyntheticOptions {
  int days = 151;
  std::string start_date = "2019-08-01";
  double latitude = 50.58;
  double longitude = 5.56;
  double pv_capacity = 466.4;
  std::uint64_t seed = 42;
  double dt_hours = 0.25;
  double cloud_ar = 0.85;        // AR(1) coefficient of the clear-sky index
  double cloud_mean = 0.45;      // long-run clear-sky index
  double cloud_std = 0.25;       // stationary std of the clear-sky index
  double forecast_bias = 0.0;    // fraction of capacity
  double forecast_std = 0.08;    // fraction of capacity
  PvusaParams params = kLiegeParams;
};

/// Seed-deterministic stand-in for a measured plant: PVUSA power from clear-sky
/// irradiance modulated by an AR(1) clear-sky index and a seasonal temperature profile.
std::vector<DatasetDay> generate_synthetic_dataset(const SyntheticOptions& options = {});

/// Forecast errors (forecast - measurement), one row per day.
Mat forecast_errors(const std::vector<DatasetDay>& days);

/// Samples `count` scenarios around each day's forecast. Day d draws from stream
/// derive_seed(seed, days since 1970-01-01), so a day's set does not depend on
/// which other days are present.
void attach_scenarios(std::vector<DatasetDay>& days, const CopulaModel& model, int count,
                      std::uint64_t seed, double pv_capacity);

}  // namespace capfirm

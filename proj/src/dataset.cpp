#include "capfirm/dataset.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "capfirm/csv.hpp"

namespace capfirm {

namespace {

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "nan" || s == "NaN"; }

/// Fills NaN entries by linear interpolation, flat beyond the first/last known value.
void fill_gaps(Vec& v) {
  const Eigen::Index n = v.size();
  Eigen::Index prev = -1;
  for (Eigen::Index i = 0; i <= n; ++i) {
    if (i < n && std::isnan(v(i))) continue;
    const Eigen::Index gap_begin = prev + 1;
    if (i > gap_begin) {
      for (Eigen::Index k = gap_begin; k < i; ++k) {
        if (prev < 0 && i == n) v(k) = 0.0;
        else if (prev < 0) v(k) = v(i);
        else if (i == n) v(k) = v(prev);
        else v(k) = v(prev) + (v(i) - v(prev)) * double(k - prev) / double(i - prev);
      }
    }
    prev = i;
  }
}

struct Accumulator {
  Vec sum, count;
  explicit Accumulator(int T) : sum(Vec::Zero(T)), count(Vec::Zero(T)) {}
  void add(int k, double v) {
    sum(k) += v;
    count(k) += 1.0;
  }
  Vec mean() const {
    Vec m(sum.size());
    for (Eigen::Index k = 0; k < m.size(); ++k)
      m(k) = count(k) > 0 ? sum(k) / count(k) : std::numeric_limits<double>::quiet_NaN();
    return m;
  }
};

struct DayBuckets {
  Accumulator pv, irr, temp, fc;
  explicit DayBuckets(int T) : pv(T), irr(T), temp(T), fc(T) {}
};

}  // namespace

LoadResult load_measurements(std::istream& in, const LoadOptions& options) {
  if (options.resample_minutes <= 0 || 1440 % options.resample_minutes != 0)
    throw ConfigError("load: resampling period must divide a day");
  const int T = 1440 / options.resample_minutes;
  const long step = options.resample_minutes * 60L;

  const CsvTable table = read_csv(in);
  const int c_ts = table.require("timestamp");
  const int c_pv = table.require("pv_kw");
  const int c_irr = table.column("irradiance_wm2");
  const int c_temp = table.column("temp_c");
  const int c_fc = table.column("forecast_kw");
  if ((c_irr < 0) != (c_temp < 0)) throw DataError("load: irradiance_wm2 and temp_c come together");
  const bool weather = c_irr >= 0;

  std::map<std::chrono::sys_days, DayBuckets> buckets;
  Timestamp last{};
  bool first = true;
  for (const auto& row : table.rows) {
    Timestamp ts;
    try {
      ts = parse_timestamp(row.fields[std::size_t(c_ts)]);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(row.line) + ": " + e.what());
    }
    if (!first && ts <= last)
      throw DataError("line " + std::to_string(row.line) + ": timestamps must be strictly increasing");
    first = false;
    last = ts;
    const auto day = day_of(ts);
    const int k = int(seconds_of_day(ts) / step);
    auto it = buckets.try_emplace(day, T).first;
    auto take = [&](int col, Accumulator& acc, const char* name) {
      const std::string& f = row.fields[std::size_t(col)];
      if (is_missing(f)) return;
      acc.add(k, parse_number(f, row.line, name));
    };
    take(c_pv, it->second.pv, "pv_kw");
    if (weather) {
      take(c_irr, it->second.irr, "irradiance_wm2");
      take(c_temp, it->second.temp, "temp_c");
    }
    if (c_fc >= 0) take(c_fc, it->second.fc, "forecast_kw");
  }

  LoadResult out;
  if (buckets.empty()) return out;
  for (auto day = buckets.begin()->first; day <= buckets.rbegin()->first; day += std::chrono::days{1}) {
    const auto it = buckets.find(day);
    if (it == buckets.end()) {
      out.diagnostics.push_back(format_date(day) + ": no data, dropped");
      continue;
    }
    const DayBuckets& b = it->second;
    const int missing = int((b.pv.count.array() == 0.0).count());
    if (missing > options.max_missing_fraction * T) {
      out.diagnostics.push_back(format_date(day) + ": " + std::to_string(missing) + " of " +
                                std::to_string(T) + " periods missing, dropped");
      continue;
    }
    if (missing > 0)
      out.diagnostics.push_back(format_date(day) + ": interpolated " + std::to_string(missing) +
                                " missing periods");
    DatasetDay d;
    d.date = day;
    d.measurements = b.pv.mean();
    fill_gaps(d.measurements);
    if (c_fc >= 0) {
      d.forecast = b.fc.mean();
      fill_gaps(d.forecast);
    } else {
      d.forecast = d.measurements;
    }
    if (weather) {
      WeatherSeries w;
      w.irradiance = b.irr.mean();
      w.temperature = b.temp.mean();
      fill_gaps(w.irradiance);
      fill_gaps(w.temperature);
      for (int k = 0; k < T; ++k) w.time.push_back(day + std::chrono::seconds(k * step));
      d.weather = std::move(w);
    }
    out.days.push_back(std::move(d));
  }
  return out;
}

LoadResult load_measurements(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return load_measurements(in, options);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_measurements(std::ostream& out, const std::vector<DatasetDay>& days, double dt_hours) {
  bool weather = !days.empty();
  for (const auto& d : days) weather &= d.weather.has_value();
  std::vector<std::string> header{"timestamp", "pv_kw"};
  if (weather) {
    header.push_back("irradiance_wm2");
    header.push_back("temp_c");
  }
  header.push_back("forecast_kw");
  CsvWriter w(out, header);
  const long step = std::lround(dt_hours * 3600.0);
  for (const auto& d : days) {
    for (int t = 0; t < d.periods(); ++t) {
      std::vector<std::string> row{format_timestamp(d.date + std::chrono::seconds(t * step)),
                                   format_number(d.measurements(t))};
      if (weather) {
        row.push_back(format_number(d.weather->irradiance(t)));
        row.push_back(format_number(d.weather->temperature(t)));
      }
      row.push_back(format_number(d.forecast(t)));
      w.row(row);
    }
  }
}

Mat forecast_errors(const std::vector<DatasetDay>& days) {
  if (days.empty()) return Mat();
  const int T = days.front().periods();
  Mat e(Eigen::Index(days.size()), T);
  for (std::size_t i = 0; i < days.size(); ++i) {
    if (days[i].periods() != T || days[i].forecast.size() != T)
      throw ShapeError("forecast errors: days differ in length");
    e.row(Eigen::Index(i)) = (days[i].forecast - days[i].measurements).transpose();
  }
  return e;
}

void attach_scenarios(std::vector<DatasetDay>& days, const CopulaModel& model, int count,
                      std::uint64_t seed, double pv_capacity) {
  for (auto& d : days) {
    const auto stream = static_cast<std::uint64_t>(d.date.time_since_epoch().count());
    d.scenarios = sample_scenarios(model, d.forecast.cwiseMax(0.0).cwiseMin(pv_capacity), count,
                                   derive_seed(seed, stream), pv_capacity);
  }
}

}  // namespace capfirm

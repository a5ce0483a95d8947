#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "capfirm/config.hpp"
#include "capfirm/csv.hpp"
#include "capfirm/dataset.hpp"
#include "capfirm/timeutil.hpp"

using namespace capfirm;
using namespace std::chrono;

namespace {

std::string minute_day(const std::string& date, int gap_from_min = -1, int gap_to_min = -1) {
  std::ostringstream os;
  os << "timestamp,pv_kw\n";
  for (int m = 0; m < 1440; ++m) {
    if (m >= gap_from_min && m < gap_to_min) continue;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:00Z,%d\n", date.c_str(), m / 60, m % 60, m);
    os << buf;
  }
  return os.str();
}

}  // namespace

TEST_CASE("timestamps") {
  const auto t = parse_timestamp("2019-08-01T13:45:30Z");
  CHECK(format_timestamp(t) == "2019-08-01T13:45:30Z");
  CHECK(parse_timestamp("2019-08-01 13:45") == parse_timestamp("2019-08-01T13:45:00"));
  CHECK(seconds_of_day(t) == 13 * 3600 + 45 * 60 + 30);
  CHECK(day_of_year(t) == 213);
  CHECK(format_date(day_of(t)) == "2019-08-01");
  CHECK_THROWS_AS(parse_timestamp("2019-13-01T00:00Z"), DataError);
  CHECK_THROWS_AS(parse_timestamp("yesterday"), DataError);
}

TEST_CASE("number formatting") {
  CHECK(format_number(1.5) == "1.500000000");
  CHECK(format_number(-0.0) == "0.000000000");
  CHECK(format_number(-1e-12) == "0.000000000");
  CHECK(format_number(NAN) == "NA");
  CHECK(parse_number("2.25", 3, "x") == 2.25);
  try {
    parse_number("2.2.5", 7, "pv_kw");
    FAIL("expected a parse error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
}

TEST_CASE("csv reader") {
  std::istringstream ok("a,b\n1,2\n\n3,4\n");
  const auto t = read_csv(ok);
  CHECK(t.header.size() == 2);
  CHECK(t.rows.size() == 2);
  CHECK(t.rows[1].line == 4);
  CHECK(t.column("b") == 1);
  CHECK(t.column("c") == -1);
  CHECK_THROWS_AS(t.require("c"), DataError);
  std::istringstream bad("a,b\n1,2\n3\n");
  try {
    read_csv(bad);
    FAIL("expected a field-count error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("csv round trips reproduce values to 1e-9") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 466.4);
  const auto day = sys_days{2019y / August / 3};
  ScenarioSet set;
  set.values = Mat(3, 96);
  for (int i = 0; i < set.values.size(); ++i) set.values.data()[i] = U(rng);
  set.weights = Vec::Constant(3, 1.0 / 3.0);
  std::stringstream s1;
  write_scenarios(s1, {{day, set}, {day + days{1}, set}});
  const auto back = read_scenarios(s1);
  REQUIRE(back.size() == 2);
  CHECK((back.at(day).values - set.values).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(back.at(day).weights.sum() == doctest::Approx(1.0));

  EngagementPlan e{Vec::LinSpaced(96, -23.32, 400.123456789)};
  std::stringstream s2;
  write_engagements(s2, {{day, e}});
  const auto eb = read_engagements(s2);
  CHECK((eb.at(day).values - e.values).cwiseAbs().maxCoeff() <= 1e-9);

  std::vector<DatasetDay> ds(2);
  ds[0].date = day;
  ds[1].date = day + days{1};
  for (auto& d : ds) {
    d.measurements = Vec(96);
    d.forecast = Vec(96);
    for (int t = 0; t < 96; ++t) {
      d.measurements(t) = U(rng);
      d.forecast(t) = U(rng);
    }
  }
  std::stringstream s3;
  write_measurements(s3, ds, 0.25);
  const auto loaded = load_measurements(s3);
  REQUIRE(loaded.days.size() == 2);
  for (int k = 0; k < 2; ++k) {
    CHECK((loaded.days[k].measurements - ds[k].measurements).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((loaded.days[k].forecast - ds[k].forecast).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("trace, ledger and sizing writers use the fixed column orders") {
  const auto day = sys_days{2019y / August / 3};
  std::ostringstream t;
  write_traces(t, {{day, DispatchTrace::zeros(96)}});
  CHECK(t.str().rfind("day,period,production_kw,pv_kw,charge_kw,discharge_kw,soc_kwh\n", 0) == 0);
  std::ostringstream l;
  write_ledger(l, {}, PlanMode::Deterministic);
  CHECK(l.str() == "day,mode,revenue_eur,penalty_eur,export_kwh,withdraw_kwh,discharge_kwh\n");
  SizingGrid g;
  std::ostringstream s, a, h;
  write_sizing(s, g);
  write_argmax(a, g);
  write_heatmap(h, g);
  CHECK(s.str() == "price_eur_mwh,ratio,lcoe_eur_mwh,net_eur_mwh,export_mwh,withdraw_mwh,penalty_eur,revenue_eur,cycles,battery_count\n");
  CHECK(a.str() == "price_eur_mwh,ratio_star,net_star\n");
  CHECK(h.str() == "price_eur_mwh,ratio,metric,value\n");
}

TEST_CASE("measurement loader: resampling") {
  SUBCASE("one-minute data become 96 quarter-hour means") {
    std::istringstream in(minute_day("2019-08-01"));
    const auto r = load_measurements(in);
    REQUIRE(r.days.size() == 1);
    CHECK(r.days[0].periods() == 96);
    for (int t = 0; t < 96; ++t) CHECK(r.days[0].measurements(t) == doctest::Approx(15 * t + 7.0));
    CHECK(r.days[0].forecast == r.days[0].measurements);
    CHECK_FALSE(r.days[0].weather.has_value());
  }
  SUBCASE("quarter-hour data pass through unchanged") {
    std::ostringstream os;
    os << "timestamp,pv_kw,irradiance_wm2,temp_c\n";
    for (int t = 0; t < 96; ++t) os << "2019-08-02T" << (t / 4 < 10 ? "0" : "") << t / 4 << ":" << (t % 4 ? std::to_string(15 * (t % 4)) : "00") << ":00Z," << t * 1.25 << "," << t << ",15\n";
    std::istringstream in(os.str());
    const auto r = load_measurements(in);
    REQUIRE(r.days.size() == 1);
    for (int t = 0; t < 96; ++t) CHECK(r.days[0].measurements(t) == t * 1.25);
    REQUIRE(r.days[0].weather.has_value());
    CHECK(r.days[0].weather->irradiance(10) == 10.0);
    CHECK(r.diagnostics.empty());
  }
  SUBCASE("a two-hour gap is interpolated with a diagnostic") {
    std::istringstream in(minute_day("2019-08-01", 10 * 60, 12 * 60));
    const auto r = load_measurements(in);
    REQUIRE(r.days.size() == 1);
    CHECK(r.diagnostics.size() == 1);
    // linear between the neighbouring means at 09:45 and 12:00
    const double left = 39 * 15 + 7.0, right = 48 * 15 + 7.0;
    for (int t = 40; t < 48; ++t) CHECK(r.days[0].measurements(t) == doctest::Approx(left + (right - left) * (t - 39) / 9.0));
  }
  SUBCASE("days with more than 10% missing are dropped") {
    std::istringstream in(minute_day("2019-08-01", 6 * 60, 9 * 60) + minute_day("2019-08-02").substr(16));
    const auto r = load_measurements(in);
    REQUIRE(r.days.size() == 1);
    CHECK(format_date(r.days[0].date) == "2019-08-02");
    CHECK_FALSE(r.diagnostics.empty());
  }
}

TEST_CASE("measurement loader: errors") {
  std::istringstream back("timestamp,pv_kw\n2019-08-01T00:10:00Z,1\n2019-08-01T00:05:00Z,2\n");
  try {
    load_measurements(back);
    FAIL("expected a monotonicity error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream junk("timestamp,pv_kw\n2019-08-01T00:10:00Z,abc\n");
  CHECK_THROWS_AS(load_measurements(junk), DataError);
  std::istringstream nocol("time,power\n2019-08-01T00:10:00Z,1\n");
  CHECK_THROWS_AS(load_measurements(nocol), DataError);
  CHECK_THROWS_AS(load_measurements(std::string("/nonexistent/file.csv")), DataError);
}

TEST_CASE("synthetic data") {
  SyntheticOptions o;
  o.days = 5;
  const auto a = generate_synthetic_dataset(o), b = generate_synthetic_dataset(o);
  REQUIRE(a.size() == 5);
  for (int k = 0; k < 5; ++k) {
    CHECK(a[k].measurements == b[k].measurements);
    CHECK(a[k].forecast == b[k].forecast);
    CHECK(a[k].measurements.minCoeff() >= 0.0);
    CHECK(a[k].measurements.maxCoeff() <= o.pv_capacity);
    CHECK(a[k].forecast.maxCoeff() <= o.pv_capacity);
    REQUIRE(a[k].weather.has_value());
  }
  CHECK(format_date(a[0].date) == "2019-08-01");
  o.seed = 43;
  CHECK(generate_synthetic_dataset(o)[0].measurements != a[0].measurements);

  SyntheticOptions quiet;
  quiet.days = 3;
  quiet.cloud_std = 0.0;
  quiet.forecast_std = 0.0;
  for (const auto& d : generate_synthetic_dataset(quiet)) CHECK(d.forecast == d.measurements);
}

TEST_CASE("synthetic regression set: daytime capacity factor between 8% and 20%") {
  const auto ds = generate_synthetic_dataset();
  REQUIRE(ds.size() == 151);
  double sum = 0.0;
  long n = 0;
  for (const auto& d : ds)
    for (int t = 0; t < d.periods(); ++t)
      if (clear_sky_irradiance(50.58, d.weather->time[t] + seconds(450), 5.56) > 0.0) {
        sum += d.measurements(t);
        ++n;
      }
  const double cf = sum / n / 466.4;
  CHECK(cf >= 0.08);
  CHECK(cf <= 0.20);
}

TEST_CASE("scenario attachment is per-day deterministic") {
  SyntheticOptions o;
  o.days = 40;
  auto ds = generate_synthetic_dataset(o);
  const auto model = fit_copula(forecast_errors(ds), 466.4);
  auto all = ds;
  attach_scenarios(all, model, 5, 42, 466.4);
  std::vector<DatasetDay> one{ds[17]};
  attach_scenarios(one, model, 5, 42, 466.4);
  CHECK(one[0].scenarios->values == all[17].scenarios->values);
  CHECK(all[3].scenarios->count() == 5);
}

TEST_CASE("configuration defaults") {
  const AppConfig c;
  CHECK(c.pv_capacity == 466.4);
  CHECK(c.dt_hours == 0.25);
  CHECK(c.rules.ramp_offpeak == 0.075);
  CHECK(c.rules.ramp_peak == 0.15);
  CHECK(c.rules.eng_min_offpeak == -0.05);
  CHECK(c.rules.eng_min_peak == 0.20);
  CHECK(c.rules.prod_min_peak == 0.15);
  CHECK(c.rules.deadband == 0.05);
  CHECK(c.econ.capex_bess == 300.0);
  CHECK(c.econ.capex_pv == 700.0);
  CHECK(c.econ.opex_fraction == 0.01);
  CHECK(c.econ.lifetime_years == 20);
  CHECK(c.econ.discount_rate == 0.05);
  CHECK(c.econ.cycle_life == 3000.0);
  CHECK(c.storage.soc_min_fraction == 0.1);
  CHECK(c.storage.soc_max_fraction == 0.9);
  CHECK(c.storage.hours_to_full == 1.0);
  CHECK(c.scenario_count == 20);
  CHECK(c.sizing_prices.size() * c.sizing_ratios.size() == 56);
  CHECK(c.peak_start_hour == 19.0);
  CHECK(c.peak_end_hour == 21.0);
  CHECK(c.solver.node_limit == 1000);
}

TEST_CASE("checked-in default config reproduces the built-in defaults literally") {
  AppConfig c;
  c.pv_capacity = 1.0;
  c.econ.capex_bess = 1.0;
  c.scenario_count = 1;
  load_config_file(c, CAPFIRM_SOURCE_DIR "/config/default.cfg");
  std::ostringstream loaded, builtin;
  dump_config(loaded, c);
  dump_config(builtin, AppConfig{});
  CHECK(loaded.str() == builtin.str());
  CHECK(get_config_value(c, "system.pv_capacity") == "466.4");
  CHECK(get_config_value(c, "tariff.deadband") == "0.05");
  CHECK(get_config_value(c, "economics.capex_bess") == "300");
  CHECK(get_config_value(c, "economics.capex_pv") == "700");
  CHECK(get_config_value(c, "economics.cycle_life") == "3000");
  CHECK(get_config_value(c, "scenarios.count") == "20");
}

TEST_CASE("configuration parsing") {
  AppConfig c;
  std::istringstream in("# comment\nrun.mode = D\n  tariff.price_peak = 150 # trailing\nsizing.ratios = 0.5, 1\ntariff.withdraw_price = 60\n");
  load_config(c, in);
  CHECK(c.mode == PlanMode::Deterministic);
  CHECK(c.price_peak == 150.0);
  CHECK(c.sizing_ratios == std::vector<double>{0.5, 1.0});
  CHECK(c.withdraw_price == 60.0);
  set_config_value(c, "tariff.withdraw_price", "selling");
  CHECK_FALSE(c.withdraw_price.has_value());

  std::istringstream unknown("grid.dt_hours = 0.25\nfoo.bar = 1\n");
  try {
    load_config(c, unknown);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("foo.bar") != std::string::npos);
    CHECK(msg.find("system.pv_capacity") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
  std::istringstream malformed("grid.dt_hours 0.25\n");
  CHECK_THROWS_AS(load_config(c, malformed), ConfigError);
  CHECK_THROWS_AS(set_config_value(c, "grid.dt_hours", "fast"), ConfigError);
  CHECK(config_keys().size() > 40);
  for (const auto& k : config_keys()) CHECK_NOTHROW(get_config_value(AppConfig{}, k));
}

TEST_CASE("config derived objects") {
  AppConfig c;
  c.price_peak = 200.0;
  const auto p = c.policy();
  CHECK(p.price(80) == 200.0);
  CHECK(p.price(10) == 100.0);
  const auto s = c.system();
  CHECK(s.bess_capacity == doctest::Approx(0.9 * 0.5 * 466.4));
  c.dt_hours = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

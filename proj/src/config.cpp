#include "capfirm/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace capfirm {

TimeGrid AppConfig::grid() const { return TimeGrid::daily(dt_hours, peak_start_hour, peak_end_hour); }

TariffPolicy AppConfig::policy() const {
  return build_cre_policy(grid(), price_offpeak, price_peak, pv_capacity, rules);
}

SystemConfig AppConfig::system() const { return storage.system(pv_capacity, storage_ratio); }

void AppConfig::validate() const {
  grid();
  policy().validate();
  system().validate();
  econ.validate();
  if (scenario_count < 1) throw ConfigError("config: scenarios.count must be at least 1");
  if (jobs < 1) throw ConfigError("config: run.jobs must be at least 1");
  if (sizing_prices.empty() || sizing_ratios.empty()) throw ConfigError("config: empty sizing grid");
  if (solver.node_limit < 1) throw ConfigError("config: solver.node_limit must be at least 1");
}

namespace {

std::string show(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double read_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || r.ec != std::errc() || r.ptr != text.data() + text.size())
    throw ConfigError("config: " + key + " expects a number, got '" + text + "'");
  return v;
}

long long read_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || r.ec != std::errc() || r.ptr != text.data() + text.size())
    throw ConfigError("config: " + key + " expects an integer, got '" + text + "'");
  return v;
}

bool read_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config: " + key + " expects true or false, got '" + text + "'");
}

std::vector<double> read_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("config: " + key + " has an empty list item");
    out.push_back(read_double(key, item.substr(b, e - b + 1)));
  }
  return out;
}

std::string show_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + show(v[i]);
  return s;
}

struct Entry {
  std::string key;
  std::function<std::string(const AppConfig&)> get;
  std::function<void(AppConfig&, const std::string&)> set;
};

Entry number(std::string key, double AppConfig::*field) {
  return {key, [field](const AppConfig& c) { return show(c.*field); },
          [key, field](AppConfig& c, const std::string& v) { c.*field = read_double(key, v); }};
}

template <typename Get>
Entry number_at(std::string key, Get ref) {
  return {key, [ref](const AppConfig& c) { return show(ref(const_cast<AppConfig&>(c))); },
          [key, ref](AppConfig& c, const std::string& v) { ref(c) = read_double(key, v); }};
}

template <typename Get>
Entry integer_at(std::string key, Get ref) {
  return {key, [ref](const AppConfig& c) { return std::to_string(ref(const_cast<AppConfig&>(c))); },
          [key, ref](AppConfig& c, const std::string& v) {
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(read_int(key, v));
          }};
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back(number("grid.dt_hours", &AppConfig::dt_hours));
    e.push_back(number("grid.peak_start_hour", &AppConfig::peak_start_hour));
    e.push_back(number("grid.peak_end_hour", &AppConfig::peak_end_hour));

    e.push_back(number("tariff.price_offpeak", &AppConfig::price_offpeak));
    e.push_back(number("tariff.price_peak", &AppConfig::price_peak));
    e.push_back({"tariff.withdraw_price",
                 [](const AppConfig& c) { return c.withdraw_price ? show(*c.withdraw_price) : std::string("selling"); },
                 [](AppConfig& c, const std::string& v) {
                   if (v == "selling" || v.empty()) c.withdraw_price.reset();
                   else c.withdraw_price = read_double("tariff.withdraw_price", v);
                 }});
    e.push_back(number_at("tariff.ramp_offpeak", [](AppConfig& c) -> double& { return c.rules.ramp_offpeak; }));
    e.push_back(number_at("tariff.ramp_peak", [](AppConfig& c) -> double& { return c.rules.ramp_peak; }));
    e.push_back(number_at("tariff.eng_min_offpeak", [](AppConfig& c) -> double& { return c.rules.eng_min_offpeak; }));
    e.push_back(number_at("tariff.eng_min_peak", [](AppConfig& c) -> double& { return c.rules.eng_min_peak; }));
    e.push_back(number_at("tariff.prod_min_offpeak", [](AppConfig& c) -> double& { return c.rules.prod_min_offpeak; }));
    e.push_back(number_at("tariff.prod_min_peak", [](AppConfig& c) -> double& { return c.rules.prod_min_peak; }));
    e.push_back(number_at("tariff.eng_max", [](AppConfig& c) -> double& { return c.rules.eng_max; }));
    e.push_back(number_at("tariff.prod_max", [](AppConfig& c) -> double& { return c.rules.prod_max; }));
    e.push_back(number_at("tariff.deadband", [](AppConfig& c) -> double& { return c.rules.deadband; }));

    e.push_back(number("system.pv_capacity", &AppConfig::pv_capacity));
    e.push_back(number("system.storage_ratio", &AppConfig::storage_ratio));
    e.push_back(number_at("system.soc_min_fraction", [](AppConfig& c) -> double& { return c.storage.soc_min_fraction; }));
    e.push_back(number_at("system.soc_max_fraction", [](AppConfig& c) -> double& { return c.storage.soc_max_fraction; }));
    e.push_back(number_at("system.soc_boundary_fraction", [](AppConfig& c) -> double& { return c.storage.soc_boundary_fraction; }));
    e.push_back(number_at("system.hours_to_full", [](AppConfig& c) -> double& { return c.storage.hours_to_full; }));
    e.push_back(number_at("system.eta_charge", [](AppConfig& c) -> double& { return c.storage.eta_charge; }));
    e.push_back(number_at("system.eta_discharge", [](AppConfig& c) -> double& { return c.storage.eta_discharge; }));

    e.push_back(number_at("economics.capex_bess", [](AppConfig& c) -> double& { return c.econ.capex_bess; }));
    e.push_back(number_at("economics.capex_pv", [](AppConfig& c) -> double& { return c.econ.capex_pv; }));
    e.push_back(number_at("economics.opex_fraction", [](AppConfig& c) -> double& { return c.econ.opex_fraction; }));
    e.push_back(integer_at("economics.lifetime_years", [](AppConfig& c) -> int& { return c.econ.lifetime_years; }));
    e.push_back(number_at("economics.discount_rate", [](AppConfig& c) -> double& { return c.econ.discount_rate; }));
    e.push_back(number_at("economics.cycle_life", [](AppConfig& c) -> double& { return c.econ.cycle_life; }));

    e.push_back({"sizing.prices", [](const AppConfig& c) { return show_list(c.sizing_prices); },
                 [](AppConfig& c, const std::string& v) { c.sizing_prices = read_list("sizing.prices", v); }});
    e.push_back({"sizing.ratios", [](const AppConfig& c) { return show_list(c.sizing_ratios); },
                 [](AppConfig& c, const std::string& v) { c.sizing_ratios = read_list("sizing.ratios", v); }});

    e.push_back(integer_at("solver.node_limit", [](AppConfig& c) -> int& { return c.solver.node_limit; }));
    e.push_back({"solver.repair", [](const AppConfig& c) { return std::string(c.solver.repair ? "true" : "false"); },
                 [](AppConfig& c, const std::string& v) { c.solver.repair = read_bool("solver.repair", v); }});
    e.push_back(number_at("solver.gap_tol", [](AppConfig& c) -> double& { return c.solver.gap_tol; }));
    e.push_back(integer_at("solver.max_iterations", [](AppConfig& c) -> int& { return c.solver.qp.max_iterations; }));
    e.push_back(number_at("solver.tolerance", [](AppConfig& c) -> double& { return c.solver.qp.tolerance; }));

    e.push_back(integer_at("scenarios.count", [](AppConfig& c) -> int& { return c.scenario_count; }));
    e.push_back(integer_at("scenarios.min_days", [](AppConfig& c) -> int& { return c.copula_min_days; }));

    e.push_back(integer_at("data.resample_minutes", [](AppConfig& c) -> int& { return c.resample_minutes; }));
    e.push_back(number("data.max_missing_fraction", &AppConfig::max_missing_fraction));
    e.push_back(number_at("pvusa.window_hours", [](AppConfig& c) -> double& { return c.pvusa.window_hours; }));
    e.push_back(number_at("pvusa.step_hours", [](AppConfig& c) -> double& { return c.pvusa.step_hours; }));
    e.push_back(number_at("pvusa.irradiance_threshold", [](AppConfig& c) -> double& { return c.pvusa.irradiance_threshold; }));

    e.push_back(integer_at("synthetic.days", [](AppConfig& c) -> int& { return c.synthetic.days; }));
    e.push_back({"synthetic.start_date", [](const AppConfig& c) { return c.synthetic.start_date; },
                 [](AppConfig& c, const std::string& v) {
                   parse_timestamp(v + "T00:00:00");
                   c.synthetic.start_date = v;
                 }});
    e.push_back(number_at("synthetic.latitude", [](AppConfig& c) -> double& { return c.synthetic.latitude; }));
    e.push_back(number_at("synthetic.longitude", [](AppConfig& c) -> double& { return c.synthetic.longitude; }));
    e.push_back(number_at("synthetic.cloud_ar", [](AppConfig& c) -> double& { return c.synthetic.cloud_ar; }));
    e.push_back(number_at("synthetic.cloud_mean", [](AppConfig& c) -> double& { return c.synthetic.cloud_mean; }));
    e.push_back(number_at("synthetic.cloud_std", [](AppConfig& c) -> double& { return c.synthetic.cloud_std; }));
    e.push_back(number_at("synthetic.forecast_bias", [](AppConfig& c) -> double& { return c.synthetic.forecast_bias; }));
    e.push_back(number_at("synthetic.forecast_std", [](AppConfig& c) -> double& { return c.synthetic.forecast_std; }));

    e.push_back(integer_at("run.seed", [](AppConfig& c) -> std::uint64_t& { return c.seed; }));
    e.push_back(integer_at("run.jobs", [](AppConfig& c) -> int& { return c.jobs; }));
    e.push_back({"run.mode", [](const AppConfig& c) { return to_string(c.mode); },
                 [](AppConfig& c, const std::string& v) { c.mode = parse_plan_mode(v); }});
    return e;
  }();
  return entries;
}

const Entry& find(const std::string& key) {
  for (const auto& e : registry())
    if (e.key == key) return e;
  std::string valid;
  for (const auto& e : registry()) valid += "\n  " + e.key;
  throw ConfigError("config: unknown key '" + key + "'; valid keys are:" + valid);
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : registry()) keys.push_back(e.key);
  return keys;
}

void set_config_value(AppConfig& c, const std::string& key, const std::string& value) {
  find(key).set(c, value);
}

std::string get_config_value(const AppConfig& c, const std::string& key) { return find(key).get(c); }

void load_config(AppConfig& c, std::istream& in) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'section.key = value'");
    auto trim = [](std::string s) {
      const auto x = s.find_first_not_of(" \t\r");
      const auto y = s.find_last_not_of(" \t\r");
      return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(c, key, value);
    } catch (const Error& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void load_config_file(AppConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  load_config(c, in);
}

void dump_config(std::ostream& out, const AppConfig& c) {
  std::string section;
  for (const auto& e : registry()) {
    const std::string s = e.key.substr(0, e.key.find('.'));
    if (s != section) {
      if (!section.empty()) out << '\n';
      out << "# " << s << '\n';
      section = s;
    }
    out << e.key << " = " << e.get(c) << '\n';
  }
}

}  // namespace capfirm

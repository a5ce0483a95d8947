#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "capfirm/dataset.hpp"
#include "capfirm/pvusa.hpp"
#include "capfirm/sizing.hpp"

namespace capfirm {

/// Every tunable number of the pipeline. Defaults reproduce the reference case study.
struct AppConfig {
  // grid
  double dt_hours = 0.25;
  double peak_start_hour = 19.0;
  double peak_end_hour = 21.0;
  // tariff
  double price_offpeak = 100.0;  // EUR/MWh
  double price_peak = 100.0;     // EUR/MWh
  std::optional<double> withdraw_price;  // EUR/MWh, unset = selling price
  CreRules rules;
  // plant
  double pv_capacity = 466.4;  // kW
  double storage_ratio = 0.5;  // nominal capacity / PV capacity
  StorageSizingRule storage;
  // economics
  EconParams econ;
  std::vector<double> sizing_prices = default_prices();
  std::vector<double> sizing_ratios = default_ratios();
  // solver
  MiqpOptions solver;
  // scenarios
  int scenario_count = 20;
  int copula_min_days = 30;
  // data
  SyntheticOptions synthetic;
  PvusaFitOptions pvusa;
  int resample_minutes = 15;
  double max_missing_fraction = 0.10;
  // run
  std::uint64_t seed = 42;
  int jobs = 1;
  PlanMode mode = PlanMode::Stochastic;

  TimeGrid grid() const;
  TariffPolicy policy() const;
  SystemConfig system() const;
  void validate() const;
};

/// Names of every accepted `section.key`, in dump order.
std::vector<std::string> config_keys();

/// Sets one key from its text form; throws ConfigError listing valid keys when unknown.
void set_config_value(AppConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const AppConfig& config, const std::string& key);

/// Reads `section.key = value` lines; `#` starts a comment.
void load_config(AppConfig& config, std::istream& in);
void load_config_file(AppConfig& config, const std::string& path);

/// Writes every key with its current value in a form load_config accepts.
void dump_config(std::ostream& out, const AppConfig& config);

}  // namespace capfirm

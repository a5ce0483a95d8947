#pragma once

#include <optional>
#include <vector>

#include "capfirm/sim.hpp"

namespace capfirm {

struct EconParams {
  double capex_bess = 300.0;  // EUR/kWh
  double capex_pv = 700.0;    // EUR/kW
  double opex_fraction = 0.01;  // of CAPEX per year
  int lifetime_years = 20;
  double discount_rate = 0.05;
  double cycle_life = 3000.0;  // full cycles per battery

  void validate() const;
};

/// Capital recovery factor i / (1 - (1 + i)^-n); 1/n when i == 0.
template <typename Scalar>
Scalar crf(Scalar i, int n) {
  using std::pow;
  if (n < 1) throw DomainError("crf: lifetime must be at least one year");
  if (i < Scalar(0)) throw DomainError("crf: negative discount rate");
  if (i == Scalar(0)) return Scalar(1) / Scalar(n);
  return i / (Scalar(1) - pow(Scalar(1) + i, Scalar(-n)));
}

/// Batteries bought over the project: max(1, ceil(n * cycles / cycle_life)), 0 without storage.
int battery_count(double annual_cycles, double bess_nominal_kwh, const EconParams& econ);

/// Upfront investment in EUR including battery replacements.
double investment(double pv_capacity_kw, double bess_nominal_kwh, int batteries, const EconParams& econ);

/// (CRF * I + O&M + W + C) / E in EUR/MWh.
double lcoe(const AnnualFigures& figures, const EconParams& econ, double pv_capacity_kw,
            double bess_nominal_kwh);

/// R / E - LCOE in EUR/MWh.
double net(const AnnualFigures& figures, const EconParams& econ, double pv_capacity_kw,
           double bess_nominal_kwh);

/// How a battery ratio becomes a plant.
struct StorageSizingRule {
  double soc_min_fraction = 0.10;
  double soc_max_fraction = 0.90;
  double soc_boundary_fraction = 0.10;  // initial and final SoC
  double hours_to_full = 1.0;
  double eta_charge = 0.95;
  double eta_discharge = 0.95;

  /// Plant with nominal capacity ratio * pv_capacity.
  SystemConfig system(double pv_capacity, double ratio) const;
};

struct SizingSetup {
  double pv_capacity = 466.4;
  TimeGrid grid = TimeGrid::daily();
  CreRules rules;
  StorageSizingRule storage;
  EconParams econ;
  PlanMode mode = PlanMode::Deterministic;
  SimOptions sim;  // sim.jobs is the worker count over cells
};

struct SizingCell {
  double price = 0.0;
  double ratio = 0.0;
  double lcoe = 0.0;
  double net = 0.0;
  AnnualFigures figures;
  int battery_count = 0;
  bool valid = false;
  std::string note;
};

struct ArgmaxEntry {
  double price = 0.0;
  std::optional<double> ratio;
  double net = 0.0;
};

struct SizingGrid {
  std::vector<double> prices;
  std::vector<double> ratios;
  std::vector<SizingCell> cells;  // price-major: cells[p * ratios.size() + r]
  std::vector<ArgmaxEntry> argmax;

  const SizingCell& at(std::size_t price, std::size_t ratio) const {
    return cells[price * ratios.size() + ratio];
  }
};

std::vector<double> default_prices();  // 50, 100, ..., 400 EUR/MWh
std::vector<double> default_ratios();  // 0.5, 0.75, ..., 2

/// One simulated cell at a flat selling price.
SizingCell evaluate_cell(const std::vector<DatasetDay>& days, double price, double ratio,
                         const SizingSetup& setup);

/// Every (price, ratio) cell plus the best ratio per price; ties go to the smaller ratio.
SizingGrid grid_search(const std::vector<DatasetDay>& days, const std::vector<double>& prices,
                       const std::vector<double>& ratios, const SizingSetup& setup);

std::vector<ArgmaxEntry> argmax_by_price(const SizingGrid& grid);

}  // namespace capfirm

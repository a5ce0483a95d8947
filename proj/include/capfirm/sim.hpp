#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "capfirm/controller.hpp"
#include "capfirm/dataset.hpp"
#include "capfirm/planner.hpp"

namespace capfirm {

/// Annualised figures of one configuration.
struct AnnualFigures {
  double export_mwh = 0.0;      // E
  double withdraw_mwh = 0.0;
  double withdraw_cost = 0.0;   // W, EUR/yr
  double penalty = 0.0;         // C, EUR/yr
  double revenue = 0.0;         // R, EUR/yr, exported energy at the selling price
  double gross_revenue = 0.0;   // EUR/yr, signed production at the selling price
  double cycles = 0.0;          // full cycles per year
  int days_simulated = 0;
  int days_skipped = 0;
  bool valid = true;
};

struct DayRecord {
  std::chrono::sys_days date;
  bool skipped = false;
  std::string reason;
  double plan_objective = 0.0;
  double control_objective = 0.0;
  DayEconomics economics;
  EngagementPlan engagement;
  DispatchTrace trace;
};

struct SimOptions {
  int jobs = 1;
  std::optional<double> withdraw_price;  // EUR/MWh, default: selling price
  std::optional<double> cycle_capacity;  // kWh per full cycle, default: system.bess_capacity
  double max_skipped_fraction = 0.05;
  bool keep_traces = false;
  MiqpOptions solver;
};

struct SimResult {
  AnnualFigures figures;
  std::vector<DayRecord> ledger;
};

/// Plans every day in the requested mode, dispatches it against the
/// measurements and annualises the sums by 365 / simulated days.
SimResult simulate(const std::vector<DatasetDay>& days, PlanMode mode, const TariffPolicy& policy,
                   const SystemConfig& system, const TimeGrid& grid, const SimOptions& options = {});

/// Plan then dispatch one day; throws on infeasibility.
DayRecord simulate_day(const DatasetDay& day, PlanMode mode, const TariffPolicy& policy,
                       const SystemConfig& system, const TimeGrid& grid, const SimOptions& options);

/// Sums day records in order and annualises.
AnnualFigures aggregate(const std::vector<DayRecord>& ledger, double cycle_capacity,
                        double max_skipped_fraction = 0.05);

/// Runs fn(i) for i in [0, count) on `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace capfirm

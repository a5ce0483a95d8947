#pragma once

#include <optional>
#include <string>
#include <vector>

#include "capfirm/domain.hpp"
#include "capfirm/qp.hpp"
#include "capfirm/scenarios.hpp"

namespace capfirm {

enum class PlanMode { Stochastic, Deterministic, PerfectForesight };

std::string to_string(PlanMode mode);     // "S", "D", "Dstar"
PlanMode parse_plan_mode(const std::string& text);

struct PlanningInstance {
  TimeGrid grid;
  TariffPolicy policy;
  SystemConfig system;
  ScenarioSet scenarios;
  PlanMode mode = PlanMode::Deterministic;

  void validate() const;
};

/// Where each variable of a planning problem lives.
///
/// Engagement values come first (one per period), then for every scenario and
/// period six consecutive entries: production, underproduction, pv, charge,
/// discharge, soc.
struct PlanningLayout {
  int periods = 0;
  int scenarios = 0;

  enum Slot { Production = 0, Underdev, Pv, Charge, Discharge, Soc, SlotCount };

  int engagement(int t) const { return t; }
  int at(int scenario, int t, Slot slot) const {
    return periods + (scenario * periods + t) * SlotCount + slot;
  }
  int variables() const { return periods + scenarios * periods * SlotCount; }
};

struct PlanningQp {
  QpProblem problem;
  PlanningLayout layout;
};

/// The engagement-planning MIQP. When `fixed_engagement` is given the
/// engagement is pinned through its bounds and the ramp rows are dropped, which
/// turns the problem into the intraday dispatch problem.
PlanningQp build_planning_qp(const PlanningInstance& instance,
                             const std::optional<Vec>& fixed_engagement = std::nullopt);

struct PlanResult {
  EngagementPlan engagement;
  std::vector<DispatchTrace> traces;  // one per scenario
  double objective = 0.0;             // EUR, expected over scenarios (negative = profit)
  QpStatus status = QpStatus::NumericalFailure;
  BranchStats branch;
};

/// Largest violation of balance, SoC recursion, bounds and complementarity on a trace.
double trace_violation(const DispatchTrace& trace, const Vec& pv_available, const Vec& engagement,
                       const TariffPolicy& policy, const SystemConfig& system, const TimeGrid& grid);

/// Engagement plus dispatch for the instance. Throws InfeasibleError naming the first
/// period whose production floor cannot be met, SolverError when the engine fails.
PlanResult plan(const PlanningInstance& instance, const MiqpOptions& options = {});

/// Single-scenario convenience: D on a point forecast, D* on measurements.
PlanResult plan_deterministic(const Vec& profile, PlanMode mode, const TimeGrid& grid,
                              const TariffPolicy& policy, const SystemConfig& system,
                              const MiqpOptions& options = {});

namespace detail {
/// Extracts per-scenario traces and the engagement from a solved planning problem.
PlanResult extract_plan(const PlanningQp& qp, const QpSolution& sol, const SystemConfig& system);
/// Elastic re-solve locating the first period where the production floor is unreachable.
[[noreturn]] void diagnose_infeasible(const PlanningInstance& instance,
                                      const std::optional<Vec>& fixed_engagement,
                                      const std::string& context);
/// Throws SolverError unless the plan meets every structural constraint to `tol`.
void assert_plan(const PlanningInstance& instance, const PlanResult& result, bool check_ramps,
                 double tol = 1e-6);
}  // namespace detail

}  // namespace capfirm

#pragma once

#include <optional>

#include "capfirm/domain.hpp"
#include "capfirm/qp.hpp"

namespace capfirm {

/// Money and energy flows of one simulated day, computed from the trace.
struct DayEconomics {
  double gross_revenue = 0.0;   // EUR, sum of dt * price * production (signed)
  double penalty = 0.0;         // EUR
  double export_revenue = 0.0;  // EUR, positive production only
  double withdraw_cost = 0.0;   // EUR, withdrawn energy at the withdrawal price
  double export_kwh = 0.0;
  double withdraw_kwh = 0.0;
  double discharge_kwh = 0.0;

  double net() const { return gross_revenue - penalty; }
};

/// Withdrawal price per period in EUR/MWh; nullopt means the selling price.
DayEconomics day_economics(const DispatchTrace& trace, const EngagementPlan& engagement,
                           const TariffPolicy& policy, const TimeGrid& grid,
                           const std::optional<double>& withdraw_price = std::nullopt);

struct ControlResult {
  DispatchTrace trace;
  DayEconomics economics;
  double objective = 0.0;  // solver objective, EUR (negative = profit)
  QpStatus status = QpStatus::NumericalFailure;
};

/// Whole-day dispatch with perfect knowledge of the realised PV and the
/// engagement held fixed. Throws InfeasibleError naming the first period whose
/// production floor cannot be met.
ControlResult oracle_control(const EngagementPlan& engagement, const Vec& realized_pv,
                             const TariffPolicy& policy, const SystemConfig& system,
                             const TimeGrid& grid, const MiqpOptions& options = {},
                             const std::optional<double>& withdraw_price = std::nullopt);

}  // namespace capfirm

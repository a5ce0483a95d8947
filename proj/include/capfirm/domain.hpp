#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <stdexcept>
#include <string>

#include "capfirm/errors.hpp"

namespace capfirm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using MaskX = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Daily planning grid. Period t covers [t*dt, (t+1)*dt) hours after midnight UTC.
struct TimeGrid {
  int periods = 96;
  double dt_hours = 0.25;
  MaskX peak;

  /// Grid of 24/dt periods with peak flag set on periods starting in [peak_start, peak_end).
  static TimeGrid daily(double dt_hours = 0.25, double peak_start_h = 19.0,
                        double peak_end_h = 21.0);

  void validate() const;
};

/// Fractions of the installed PV capacity that shape the tender rules.
struct CreRules {
  double ramp_offpeak = 0.075;
  double ramp_peak = 0.15;
  double eng_min_offpeak = -0.05;
  double eng_min_peak = 0.20;
  double prod_min_offpeak = -0.05;
  double prod_min_peak = 0.15;
  double eng_max = 1.0;
  double prod_max = 1.0;
  double deadband = 0.05;
};

/// Tender policy: prices in EUR/MWh, powers in kW.
struct TariffPolicy {
  Vec price;
  Vec ramp_limit;
  Vec eng_min;
  Vec eng_max;
  Vec prod_min;
  Vec prod_max;
  double deadband = 0.0;
  double pv_capacity = 0.0;

  int periods() const { return static_cast<int>(price.size()); }
  void validate() const;
};

struct SystemConfig {
  double pv_capacity = 466.4;     // kW
  double bess_capacity = 0.0;     // kWh, upper SoC bound
  double bess_min = 0.0;          // kWh, lower SoC bound
  double charge_power = 0.0;      // kW
  double discharge_power = 0.0;   // kW
  double eta_charge = 0.95;
  double eta_discharge = 0.95;
  double soc_init = 0.0;          // kWh
  double soc_end = 0.0;           // kWh

  bool has_storage() const { return bess_capacity > bess_min; }
  void validate() const;
};

struct EngagementPlan {
  Vec values;  // kW
};

struct DispatchTrace {
  Vec production;  // kW, negative = withdrawal
  Vec pv_used;
  Vec charge;
  Vec discharge;
  Vec soc;  // kWh at the end of each period
  Vec underdev;

  int periods() const { return static_cast<int>(production.size()); }
  static DispatchTrace zeros(int periods);
};

TariffPolicy build_cre_policy(const TimeGrid& grid, double price_offpeak, double price_peak,
                              double pv_capacity, const CreRules& rules = {});

enum class EngagementViolation { None, RampUp, RampDown, BelowMinimum, AboveMaximum };

struct EngagementCheck {
  EngagementViolation kind = EngagementViolation::None;
  int period = -1;  // zero-based
  double excess = 0.0;

  bool ok() const { return kind == EngagementViolation::None; }
  std::string describe() const;
};

/// Ramp limits apply from the second period on; the first period is free.
EngagementCheck check_engagement(const EngagementPlan& plan, const TariffPolicy& policy,
                                 double tolerance = 1e-6);

/// Threshold-quadratic underproduction penalty in EUR for one period.
///
/// With deficit d = max(engagement - deadband - production, 0) the cost is
/// (dt * price / Pc) * d * (d + 4 * deadband); price is converted from EUR/MWh.
template <typename Scalar>
Scalar penalty(Scalar engagement, Scalar production, Scalar price, const TariffPolicy& policy,
               const TimeGrid& grid) {
  using std::max;
  const Scalar band = Scalar(policy.deadband);
  const Scalar deficit = max(Scalar(engagement - band - production), Scalar(0));
  const Scalar coef = Scalar(grid.dt_hours) * (price / Scalar(1000)) / Scalar(policy.pv_capacity);
  return coef * deficit * (deficit + Scalar(4) * band);
}

/// Evaluation-only variant that also charges production above engagement + deadband
/// with the same quadratic form. Dispatches from the planner and controller never
/// overproduce, so on those traces it agrees with penalty().
template <typename Scalar>
Scalar deviation_penalty(Scalar engagement, Scalar production, Scalar price,
                         const TariffPolicy& policy, const TimeGrid& grid) {
  using std::max;
  const Scalar band = Scalar(policy.deadband);
  const Scalar surplus = max(Scalar(production - engagement - band), Scalar(0));
  const Scalar coef = Scalar(grid.dt_hours) * (price / Scalar(1000)) / Scalar(policy.pv_capacity);
  return penalty(engagement, production, price, policy, grid) +
         coef * surplus * (surplus + Scalar(4) * band);
}

template <typename Scalar>
Scalar net_remuneration(Scalar engagement, Scalar production, Scalar price,
                        const TariffPolicy& policy, const TimeGrid& grid) {
  return Scalar(grid.dt_hours) * (price / Scalar(1000)) * production -
         penalty(engagement, production, price, policy, grid);
}

/// Per-period penalties over a whole day.
Vec penalty(const Vec& engagement, const Vec& production, const TariffPolicy& policy,
            const TimeGrid& grid);
Vec net_remuneration(const Vec& engagement, const Vec& production, const TariffPolicy& policy,
                     const TimeGrid& grid);

}  // namespace capfirm

#include "capfirm/domain.hpp"

#include <cmath>
#include <sstream>

namespace capfirm {

TimeGrid TimeGrid::daily(double dt_hours, double peak_start_h, double peak_end_h) {
  if (!(dt_hours > 0.0)) throw ConfigError("time grid: dt must be positive");
  const double count = 24.0 / dt_hours;
  const int periods = static_cast<int>(std::lround(count));
  if (periods < 1 || std::abs(count - periods) > 1e-9)
    throw ConfigError("time grid: 24 h is not a whole number of periods");
  TimeGrid grid;
  grid.periods = periods;
  grid.dt_hours = dt_hours;
  grid.peak = MaskX::Constant(periods, false);
  for (int t = 0; t < periods; ++t) {
    const double start = t * dt_hours;
    grid.peak(t) = start >= peak_start_h - 1e-9 && start < peak_end_h - 1e-9;
  }
  return grid;
}

void TimeGrid::validate() const {
  if (periods < 1) throw ConfigError("time grid: at least one period required");
  if (!(dt_hours > 0.0)) throw ConfigError("time grid: dt must be positive");
  if (peak.size() != periods) throw ShapeError("time grid: peak mask length differs from T");
}

void TariffPolicy::validate() const {
  const auto T = price.size();
  if (ramp_limit.size() != T || eng_min.size() != T || eng_max.size() != T ||
      prod_min.size() != T || prod_max.size() != T)
    throw ShapeError("tariff policy: bound vectors must all have length T");
  if (!(pv_capacity > 0.0)) throw ConfigError("tariff policy: PV capacity must be positive");
  if (deadband < 0.0) throw ConfigError("tariff policy: negative deadband");
  if ((ramp_limit.array() < 0.0).any()) throw ConfigError("tariff policy: negative ramp limit");
  if ((eng_min.array() > eng_max.array()).any())
    throw ConfigError("tariff policy: engagement minimum above maximum");
  if ((prod_min.array() > prod_max.array()).any())
    throw ConfigError("tariff policy: production minimum above maximum");
}

void SystemConfig::validate() const {
  if (!(pv_capacity > 0.0)) throw ConfigError("system: PV capacity must be positive");
  if (bess_min < 0.0 || bess_min > bess_capacity)
    throw ConfigError("system: need 0 <= minimum SoC <= capacity");
  if (soc_init < bess_min || soc_init > bess_capacity)
    throw ConfigError("system: initial SoC outside [min, capacity]");
  if (soc_end < bess_min || soc_end > bess_capacity)
    throw ConfigError("system: final SoC outside [min, capacity]");
  if (charge_power < 0.0 || discharge_power < 0.0)
    throw ConfigError("system: negative charge/discharge power");
  if (has_storage() && !(charge_power > 0.0 && discharge_power > 0.0))
    throw ConfigError("system: storage needs positive charge and discharge power");
  if (!(eta_charge > 0.0 && eta_charge <= 1.0) || !(eta_discharge > 0.0 && eta_discharge <= 1.0))
    throw ConfigError("system: efficiencies must lie in (0, 1]");
}

DispatchTrace DispatchTrace::zeros(int periods) {
  DispatchTrace tr;
  tr.production = Vec::Zero(periods);
  tr.pv_used = Vec::Zero(periods);
  tr.charge = Vec::Zero(periods);
  tr.discharge = Vec::Zero(periods);
  tr.soc = Vec::Zero(periods);
  tr.underdev = Vec::Zero(periods);
  return tr;
}

TariffPolicy build_cre_policy(const TimeGrid& grid, double price_offpeak, double price_peak,
                              double pv_capacity, const CreRules& rules) {
  grid.validate();
  if (!(pv_capacity > 0.0)) throw ConfigError("CRE policy: PV capacity must be positive");
  if (price_offpeak < 0.0 || price_peak < 0.0) throw ConfigError("CRE policy: negative price");

  const int T = grid.periods;
  TariffPolicy p;
  p.pv_capacity = pv_capacity;
  p.deadband = rules.deadband * pv_capacity;
  p.price.resize(T);
  p.ramp_limit.resize(T);
  p.eng_min.resize(T);
  p.prod_min.resize(T);
  p.eng_max = Vec::Constant(T, rules.eng_max * pv_capacity);
  p.prod_max = Vec::Constant(T, rules.prod_max * pv_capacity);
  for (int t = 0; t < T; ++t) {
    const bool pk = grid.peak(t);
    p.price(t) = pk ? price_peak : price_offpeak;
    p.ramp_limit(t) = (pk ? rules.ramp_peak : rules.ramp_offpeak) * pv_capacity;
    p.eng_min(t) = (pk ? rules.eng_min_peak : rules.eng_min_offpeak) * pv_capacity;
    p.prod_min(t) = (pk ? rules.prod_min_peak : rules.prod_min_offpeak) * pv_capacity;
  }
  p.validate();
  return p;
}

std::string EngagementCheck::describe() const {
  std::ostringstream os;
  switch (kind) {
    case EngagementViolation::None: return "ok";
    case EngagementViolation::RampUp: os << "upward ramp limit"; break;
    case EngagementViolation::RampDown: os << "downward ramp limit"; break;
    case EngagementViolation::BelowMinimum: os << "engagement minimum"; break;
    case EngagementViolation::AboveMaximum: os << "engagement maximum"; break;
  }
  os << " violated at period " << period << " by " << excess << " kW";
  return os.str();
}

EngagementCheck check_engagement(const EngagementPlan& plan, const TariffPolicy& policy,
                                 double tolerance) {
  const Vec& e = plan.values;
  if (e.size() != policy.price.size())
    throw ShapeError("check_engagement: plan length differs from policy length");
  for (Eigen::Index t = 0; t < e.size(); ++t) {
    if (e(t) < policy.eng_min(t) - tolerance)
      return {EngagementViolation::BelowMinimum, int(t), policy.eng_min(t) - e(t)};
    if (e(t) > policy.eng_max(t) + tolerance)
      return {EngagementViolation::AboveMaximum, int(t), e(t) - policy.eng_max(t)};
    if (t == 0) continue;
    const double step = e(t) - e(t - 1);
    if (step > policy.ramp_limit(t) + tolerance)
      return {EngagementViolation::RampUp, int(t), step - policy.ramp_limit(t)};
    if (-step > policy.ramp_limit(t) + tolerance)
      return {EngagementViolation::RampDown, int(t), -step - policy.ramp_limit(t)};
  }
  return {};
}

Vec penalty(const Vec& engagement, const Vec& production, const TariffPolicy& policy,
            const TimeGrid& grid) {
  if (engagement.size() != production.size() || engagement.size() != policy.price.size())
    throw ShapeError("penalty: series lengths differ");
  Vec out(engagement.size());
  for (Eigen::Index t = 0; t < out.size(); ++t)
    out(t) = penalty(engagement(t), production(t), policy.price(t), policy, grid);
  return out;
}

Vec net_remuneration(const Vec& engagement, const Vec& production, const TariffPolicy& policy,
                     const TimeGrid& grid) {
  if (engagement.size() != production.size() || engagement.size() != policy.price.size())
    throw ShapeError("net_remuneration: series lengths differ");
  Vec out(engagement.size());
  for (Eigen::Index t = 0; t < out.size(); ++t)
    out(t) = net_remuneration(engagement(t), production(t), policy.price(t), policy, grid);
  return out;
}

}  // namespace capfirm

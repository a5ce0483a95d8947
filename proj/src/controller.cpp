#include "capfirm/controller.hpp"

#include "capfirm/planner.hpp"

namespace capfirm {

DayEconomics day_economics(const DispatchTrace& tr, const EngagementPlan& eng,
                           const TariffPolicy& pol, const TimeGrid& grid,
                           const std::optional<double>& withdraw_price) {
  const int T = grid.periods;
  if (tr.periods() != T || eng.values.size() != T || pol.periods() != T)
    throw ShapeError("day economics: length mismatch");
  const double dt = grid.dt_hours;
  DayEconomics e;
  const Vec net = net_remuneration(eng.values, tr.production, pol, grid);
  const Vec pen = penalty(eng.values, tr.production, pol, grid);
  for (int t = 0; t < T; ++t) {
    const double p = tr.production(t);
    e.gross_revenue += net(t) + pen(t);
    e.penalty += pen(t);
    e.export_kwh += dt * std::max(p, 0.0);
    e.withdraw_kwh += dt * std::max(-p, 0.0);
    e.discharge_kwh += dt * tr.discharge(t);
    e.export_revenue += dt * pol.price(t) / 1000.0 * std::max(p, 0.0);
    e.withdraw_cost += dt * withdraw_price.value_or(pol.price(t)) / 1000.0 * std::max(-p, 0.0);
  }
  return e;
}

ControlResult oracle_control(const EngagementPlan& engagement, const Vec& realized_pv,
                             const TariffPolicy& policy, const SystemConfig& system,
                             const TimeGrid& grid, const MiqpOptions& options,
                             const std::optional<double>& withdraw_price) {
  if (realized_pv.size() != grid.periods) throw ShapeError("controller: PV length differs from T");
  if (engagement.values.size() != grid.periods)
    throw ShapeError("controller: engagement length differs from T");
  const PlanningInstance in{grid, policy, system, ScenarioSet::single(realized_pv),
                            PlanMode::PerfectForesight};
  const PlanningQp qp = build_planning_qp(in, engagement.values);
  const QpSolution sol = solve_miqp(qp.problem, options);
  if (sol.status == QpStatus::Infeasible)
    detail::diagnose_infeasible(in, engagement.values, "controller");
  if (!has_solution(sol.status) || sol.status == QpStatus::NodeLimitNoIncumbent)
    throw SolverError("controller: solver returned " + to_string(sol.status));

  PlanResult res = detail::extract_plan(qp, sol, system);
  res.engagement = engagement;
  detail::assert_plan(in, res, false);

  ControlResult out;
  out.trace = std::move(res.traces.front());
  out.objective = sol.objective;
  out.status = sol.status;
  out.economics = day_economics(out.trace, engagement, policy, grid, withdraw_price);
  return out;
}

}  // namespace capfirm

#include "capfirm/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace capfirm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(PlanMode mode) {
  switch (mode) {
    case PlanMode::Stochastic: return "S";
    case PlanMode::Deterministic: return "D";
    case PlanMode::PerfectForesight: return "Dstar";
  }
  return "?";
}

PlanMode parse_plan_mode(const std::string& text) {
  if (text == "S") return PlanMode::Stochastic;
  if (text == "D") return PlanMode::Deterministic;
  if (text == "Dstar" || text == "D*") return PlanMode::PerfectForesight;
  throw ConfigError("unknown planner mode '" + text + "' (expected S, D or Dstar)");
}

void PlanningInstance::validate() const {
  grid.validate();
  policy.validate();
  system.validate();
  if (policy.periods() != grid.periods) throw ShapeError("planning: policy length differs from T");
  if (scenarios.count() < 1) throw ShapeError("planning: at least one scenario required");
  if (scenarios.periods() != grid.periods) throw ShapeError("planning: scenario width differs from T");
  if (scenarios.weights.size() != scenarios.count())
    throw ShapeError("planning: one weight per scenario required");
  if ((scenarios.weights.array() < 0.0).any() || std::abs(scenarios.weights.sum() - 1.0) > 1e-9)
    throw ConfigError("planning: scenario weights must be nonnegative and sum to one");
  if (mode != PlanMode::Stochastic && scenarios.count() != 1)
    throw ShapeError("planning: D and Dstar take exactly one scenario");
  if (!scenarios.values.allFinite() || (scenarios.values.array() < 0.0).any())
    throw DataError("planning: scenario values must be finite and nonnegative");
}

PlanningQp build_planning_qp(const PlanningInstance& in, const std::optional<Vec>& fixed) {
  in.validate();
  const int T = in.grid.periods;
  const int W = in.scenarios.count();
  if (fixed && fixed->size() != T) throw ShapeError("planning: fixed engagement length differs from T");

  const auto& pol = in.policy;
  const auto& sys = in.system;
  const double dt = in.grid.dt_hours;
  const double band = pol.deadband;
  const bool storage = sys.has_storage();

  PlanningQp out;
  out.layout.periods = T;
  out.layout.scenarios = W;
  const PlanningLayout& L = out.layout;

  QpBuilder b;
  for (int t = 0; t < T; ++t) {
    if (fixed) b.add_variable((*fixed)(t), (*fixed)(t));
    else b.add_variable(pol.eng_min(t), pol.eng_max(t));
  }
  for (int w = 0; w < W; ++w) {
    const double alpha = in.scenarios.weights(w);
    for (int t = 0; t < T; ++t) {
      const double energy_price = dt * pol.price(t) / 1000.0;  // EUR per kW held for one period
      const double pen = energy_price / pol.pv_capacity;
      b.add_variable(pol.prod_min(t), pol.prod_max(t), -alpha * energy_price);
      b.add_variable(0.0, kInf, alpha * pen * 4.0 * band, alpha * pen);
      b.add_variable(0.0, in.scenarios.values(w, t));
      b.add_variable(0.0, storage ? sys.charge_power : 0.0);
      b.add_variable(0.0, storage ? sys.discharge_power : 0.0);
      if (t + 1 == T) b.add_variable(sys.soc_end, sys.soc_end);
      else b.add_variable(sys.bess_min, sys.bess_capacity);
    }
  }

  using Row = std::vector<std::pair<int, double>>;
  if (!fixed) {
    for (int t = 1; t < T; ++t) {
      b.add_le(Row{{L.engagement(t), 1.0}, {L.engagement(t - 1), -1.0}}, pol.ramp_limit(t));
      b.add_le(Row{{L.engagement(t), -1.0}, {L.engagement(t - 1), 1.0}}, pol.ramp_limit(t));
    }
  }
  StorageChain proto;
  proto.eta_charge = sys.eta_charge;
  proto.eta_discharge = sys.eta_discharge;
  proto.dt_hours = dt;
  for (int w = 0; w < W; ++w) {
    StorageChain chain = proto;
    for (int t = 0; t < T; ++t) {
      const int p = L.at(w, t, PlanningLayout::Production);
      const int d = L.at(w, t, PlanningLayout::Underdev);
      const int pv = L.at(w, t, PlanningLayout::Pv);
      const int ch = L.at(w, t, PlanningLayout::Charge);
      const int dis = L.at(w, t, PlanningLayout::Discharge);
      const int s = L.at(w, t, PlanningLayout::Soc);
      const int e = L.engagement(t);
      // underdev >= engagement - band - production; production <= engagement + band
      b.add_le(Row{{e, 1.0}, {p, -1.0}, {d, -1.0}}, band);
      b.add_le(Row{{p, 1.0}, {e, -1.0}}, band);
      b.add_eq(Row{{p, 1.0}, {pv, -1.0}, {dis, -1.0}, {ch, 1.0}}, 0.0);
      Row soc{{s, 1.0}, {ch, -dt * sys.eta_charge}, {dis, dt / sys.eta_discharge}};
      if (t == 0) {
        b.add_eq(soc, sys.soc_init);
      } else {
        soc.emplace_back(L.at(w, t - 1, PlanningLayout::Soc), -1.0);
        b.add_eq(soc, 0.0);
      }
      b.pairs.push_back({ch, dis});
      chain.charge.push_back(ch);
      chain.discharge.push_back(dis);
      chain.soc.push_back(s);
      chain.pv.push_back(pv);
    }
    b.chains.push_back(std::move(chain));
  }
  b.complementarity_tol = 1e-6;
  out.problem = std::move(b).build();
  return out;
}

double trace_violation(const DispatchTrace& tr, const Vec& avail, const Vec& eng,
                       const TariffPolicy& pol, const SystemConfig& sys, const TimeGrid& grid) {
  const int T = grid.periods;
  if (tr.periods() != T || avail.size() != T || eng.size() != T)
    throw ShapeError("trace check: length mismatch");
  const double dt = grid.dt_hours;
  double v = 0.0;
  auto below = [&](double x, double lo) { v = std::max(v, lo - x); };
  auto above = [&](double x, double hi) { v = std::max(v, x - hi); };
  for (int t = 0; t < T; ++t) {
    v = std::max(v, std::abs(tr.production(t) - tr.pv_used(t) - tr.discharge(t) + tr.charge(t)));
    const double prev = t == 0 ? sys.soc_init : tr.soc(t - 1);
    v = std::max(v, std::abs(tr.soc(t) - prev - dt * (sys.eta_charge * tr.charge(t) -
                                                        tr.discharge(t) / sys.eta_discharge)));
    below(tr.pv_used(t), 0.0);
    above(tr.pv_used(t), avail(t));
    below(tr.charge(t), 0.0);
    below(tr.discharge(t), 0.0);
    if (sys.has_storage()) {
      above(tr.charge(t), sys.charge_power);
      above(tr.discharge(t), sys.discharge_power);
    }
    below(tr.soc(t), sys.bess_min);
    above(tr.soc(t), sys.bess_capacity);
    below(tr.production(t), pol.prod_min(t));
    above(tr.production(t), pol.prod_max(t));
    above(tr.production(t), eng(t) + pol.deadband);
    v = std::max(v, std::min(tr.charge(t), tr.discharge(t)));
  }
  v = std::max(v, std::abs(tr.soc(T - 1) - sys.soc_end));
  return v;
}

namespace detail {

PlanResult extract_plan(const PlanningQp& qp, const QpSolution& sol, const SystemConfig& sys) {
  const auto& L = qp.layout;
  const auto& prob = qp.problem;
  const Vec x = sol.x.cwiseMax(prob.lower).cwiseMin(prob.upper);
  PlanResult res;
  res.status = sol.status;
  res.objective = sol.objective;
  res.branch = sol.branch;
  res.engagement.values.resize(L.periods);
  for (int t = 0; t < L.periods; ++t) res.engagement.values(t) = x(L.engagement(t));
  for (int w = 0; w < L.scenarios; ++w) {
    DispatchTrace tr = DispatchTrace::zeros(L.periods);
    for (int t = 0; t < L.periods; ++t) {
      tr.production(t) = x(L.at(w, t, PlanningLayout::Production));
      tr.underdev(t) = x(L.at(w, t, PlanningLayout::Underdev));
      tr.pv_used(t) = x(L.at(w, t, PlanningLayout::Pv));
      tr.charge(t) = x(L.at(w, t, PlanningLayout::Charge));
      tr.discharge(t) = x(L.at(w, t, PlanningLayout::Discharge));
      tr.soc(t) = x(L.at(w, t, PlanningLayout::Soc));
    }
    (void)sys;
    res.traces.push_back(std::move(tr));
  }
  return res;
}

void diagnose_infeasible(const PlanningInstance& in, const std::optional<Vec>& fixed,
                         const std::string& context) {
  // Same constraints, production floors made elastic, minimise the total shortfall.
  PlanningQp qp = build_planning_qp(in, fixed);
  QpProblem& p = qp.problem;
  const auto& L = qp.layout;
  const int n0 = p.size();
  const int T = L.periods;
  const int extra = L.scenarios * T;
  p.quad = Vec::Zero(n0 + extra);
  p.lin = Vec::Zero(n0 + extra);
  p.lin.tail(extra).setOnes();
  p.lower.conservativeResize(n0 + extra);
  p.upper.conservativeResize(n0 + extra);
  p.lower.tail(extra).setZero();
  p.upper.tail(extra).setConstant(kInf);

  std::vector<Triplet> trip;
  for (int i = 0; i < p.ineq.rows(); ++i)
    for (SparseRows::InnerIterator it(p.ineq, i); it; ++it) trip.emplace_back(i, int(it.col()), it.value());
  const int rows0 = int(p.ineq.rows());
  Vec rhs(rows0 + extra);
  rhs.head(rows0) = p.ineq_rhs;
  for (int w = 0; w < L.scenarios; ++w)
    for (int t = 0; t < T; ++t) {
      const int k = w * T + t;
      const int prod = L.at(w, t, PlanningLayout::Production);
      trip.emplace_back(rows0 + k, prod, -1.0);
      trip.emplace_back(rows0 + k, n0 + k, -1.0);
      rhs(rows0 + k) = -p.lower(prod);
      p.lower(prod) = -kInf;
    }
  p.ineq.resize(rows0 + extra, n0 + extra);
  p.ineq.setFromTriplets(trip.begin(), trip.end());
  p.ineq_rhs = rhs;
  p.eq.conservativeResize(p.eq.rows(), n0 + extra);
  p.pairs.clear();
  p.chains.clear();

  const QpSolution sol = solve_qp(p);
  if (has_solution(sol.status)) {
    for (int t = 0; t < T; ++t)
      for (int w = 0; w < L.scenarios; ++w)
        if (sol.x(n0 + w * T + t) > 1e-6)
          throw InfeasibleError(context + ": production floor unreachable at period " +
                                    std::to_string(t) + " (scenario " + std::to_string(w) +
                                    ", shortfall " + std::to_string(sol.x(n0 + w * T + t)) + " kW)",
                                t, w);
  }
  throw InfeasibleError(context + ": constraints inconsistent (boundary SoC or storage limits)", -1);
}

void assert_plan(const PlanningInstance& in, const PlanResult& res, bool check_ramps, double tol) {
  if (check_ramps) {
    const EngagementCheck chk = check_engagement(res.engagement, in.policy, tol);
    if (!chk.ok()) throw SolverError("planner produced an unacceptable engagement: " + chk.describe());
  }
  for (int w = 0; w < in.scenarios.count(); ++w) {
    const double v = trace_violation(res.traces[std::size_t(w)], in.scenarios.values.row(w).transpose(),
                                     res.engagement.values, in.policy, in.system, in.grid);
    if (v > tol)
      throw SolverError("planner trace for scenario " + std::to_string(w) +
                        " violates its constraints by " + std::to_string(v));
  }
}

}  // namespace detail

PlanResult plan(const PlanningInstance& instance, const MiqpOptions& options) {
  const PlanningQp qp = build_planning_qp(instance);
  const QpSolution sol = solve_miqp(qp.problem, options);
  if (sol.status == QpStatus::Infeasible) detail::diagnose_infeasible(instance, std::nullopt, "planner");
  if (!has_solution(sol.status) || sol.status == QpStatus::NodeLimitNoIncumbent)
    throw SolverError("planner: solver returned " + to_string(sol.status));
  PlanResult res = detail::extract_plan(qp, sol, instance.system);
  detail::assert_plan(instance, res, true);
  return res;
}

PlanResult plan_deterministic(const Vec& profile, PlanMode mode, const TimeGrid& grid,
                              const TariffPolicy& policy, const SystemConfig& system,
                              const MiqpOptions& options) {
  if (mode == PlanMode::Stochastic) throw ConfigError("plan_deterministic: mode must be D or Dstar");
  PlanningInstance in{grid, policy, system, ScenarioSet::single(profile), mode};
  return plan(in, options);
}

}  // namespace capfirm

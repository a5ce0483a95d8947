#include "capfirm/sim.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace capfirm {

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

DayRecord simulate_day(const DatasetDay& day, PlanMode mode, const TariffPolicy& policy,
                       const SystemConfig& system, const TimeGrid& grid, const SimOptions& options) {
  DayRecord rec;
  rec.date = day.date;
  PlanResult planned;
  switch (mode) {
    case PlanMode::PerfectForesight:
    case PlanMode::Deterministic: {
      const Vec profile = (mode == PlanMode::PerfectForesight ? day.measurements : day.forecast)
                              .cwiseMax(0.0)
                              .cwiseMin(system.pv_capacity);
      planned = plan_deterministic(profile, mode, grid, policy, system, options.solver);
      break;
    }
    case PlanMode::Stochastic: {
      if (!day.scenarios) throw ConfigError("simulate: S mode needs scenarios for every day");
      planned = plan(PlanningInstance{grid, policy, system, *day.scenarios, mode}, options.solver);
      break;
    }
  }
  const Vec realized = day.measurements.cwiseMax(0.0).cwiseMin(system.pv_capacity);
  ControlResult ctl = oracle_control(planned.engagement, realized, policy, system, grid,
                                     options.solver, options.withdraw_price);
  rec.plan_objective = planned.objective;
  rec.control_objective = ctl.objective;
  rec.economics = ctl.economics;
  rec.engagement = std::move(planned.engagement);
  rec.trace = std::move(ctl.trace);
  return rec;
}

AnnualFigures aggregate(const std::vector<DayRecord>& ledger, double cycle_capacity,
                        double max_skipped_fraction) {
  AnnualFigures f;
  double exp_kwh = 0, wd_kwh = 0, wd_cost = 0, pen = 0, rev = 0, gross = 0, dis = 0;
  for (const auto& r : ledger) {
    if (r.skipped) {
      ++f.days_skipped;
      continue;
    }
    ++f.days_simulated;
    exp_kwh += r.economics.export_kwh;
    wd_kwh += r.economics.withdraw_kwh;
    wd_cost += r.economics.withdraw_cost;
    pen += r.economics.penalty;
    rev += r.economics.export_revenue;
    gross += r.economics.gross_revenue;
    dis += r.economics.discharge_kwh;
  }
  const int total = f.days_simulated + f.days_skipped;
  f.valid = total > 0 && f.days_simulated > 0 && f.days_skipped <= max_skipped_fraction * total;
  if (f.days_simulated == 0) return f;
  const double scale = 365.0 / f.days_simulated;
  f.export_mwh = scale * exp_kwh / 1000.0;
  f.withdraw_mwh = scale * wd_kwh / 1000.0;
  f.withdraw_cost = scale * wd_cost;
  f.penalty = scale * pen;
  f.revenue = scale * rev;
  f.gross_revenue = scale * gross;
  f.cycles = cycle_capacity > 0.0 ? scale * dis / cycle_capacity : 0.0;
  return f;
}

SimResult simulate(const std::vector<DatasetDay>& days, PlanMode mode, const TariffPolicy& policy,
                   const SystemConfig& system, const TimeGrid& grid, const SimOptions& options) {
  if (days.empty()) throw DataError("simulate: empty dataset");
  for (const auto& d : days)
    if (d.periods() != grid.periods || d.forecast.size() != grid.periods)
      throw ShapeError("simulate: day " + format_date(d.date) + " does not match the grid");

  SimResult out;
  out.ledger.resize(days.size());
  parallel_for(int(days.size()), options.jobs, [&](int i) {
    DayRecord& rec = out.ledger[std::size_t(i)];
    try {
      rec = simulate_day(days[std::size_t(i)], mode, policy, system, grid, options);
    } catch (const SolverError& e) {
      rec = DayRecord{};
      rec.date = days[std::size_t(i)].date;
      rec.skipped = true;
      rec.reason = e.what();
    }
    if (!options.keep_traces) {
      rec.trace = DispatchTrace{};
      rec.engagement = EngagementPlan{};
    }
  });
  const double cap = options.cycle_capacity.value_or(system.bess_capacity);
  out.figures = aggregate(out.ledger, system.has_storage() ? cap : 0.0, options.max_skipped_fraction);
  return out;
}

}  // namespace capfirm

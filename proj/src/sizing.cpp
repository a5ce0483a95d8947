#include "capfirm/sizing.hpp"

#include <cmath>

namespace capfirm {

void EconParams::validate() const {
  if (lifetime_years < 1) throw ConfigError("economics: lifetime must be at least one year");
  if (!(discount_rate >= 0.0 && discount_rate < 1.0))
    throw ConfigError("economics: discount rate must lie in [0, 1)");
  if (!(cycle_life > 0.0)) throw ConfigError("economics: cycle life must be positive");
  if (capex_bess < 0.0 || capex_pv < 0.0 || opex_fraction < 0.0)
    throw ConfigError("economics: negative cost parameter");
}

int battery_count(double annual_cycles, double bess_nominal_kwh, const EconParams& econ) {
  if (!(bess_nominal_kwh > 0.0)) return 0;
  const double needed = std::ceil(econ.lifetime_years * annual_cycles / econ.cycle_life - 1e-9);
  return std::max(1, static_cast<int>(needed));
}

double investment(double pv_capacity_kw, double bess_nominal_kwh, int batteries,
                  const EconParams& econ) {
  return econ.capex_pv * pv_capacity_kw + econ.capex_bess * bess_nominal_kwh * batteries;
}

double lcoe(const AnnualFigures& f, const EconParams& econ, double pv_capacity_kw,
            double bess_nominal_kwh) {
  econ.validate();
  if (!(f.export_mwh > 0.0)) throw DomainError("lcoe: undefined without exported energy");
  const int n_batt = battery_count(f.cycles, bess_nominal_kwh, econ);
  const double I = investment(pv_capacity_kw, bess_nominal_kwh, n_batt, econ);
  const double om = econ.opex_fraction * I;
  return (crf(econ.discount_rate, econ.lifetime_years) * I + om + f.withdraw_cost + f.penalty) /
         f.export_mwh;
}

double net(const AnnualFigures& f, const EconParams& econ, double pv_capacity_kw,
           double bess_nominal_kwh) {
  const double cost = lcoe(f, econ, pv_capacity_kw, bess_nominal_kwh);
  return f.revenue / f.export_mwh - cost;
}

SystemConfig StorageSizingRule::system(double pv_capacity, double ratio) const {
  if (ratio < 0.0) throw ConfigError("sizing: negative battery ratio");
  const double nominal = ratio * pv_capacity;
  SystemConfig s;
  s.pv_capacity = pv_capacity;
  s.bess_capacity = soc_max_fraction * nominal;
  s.bess_min = soc_min_fraction * nominal;
  s.soc_init = s.soc_end = soc_boundary_fraction * nominal;
  s.charge_power = s.discharge_power = nominal / hours_to_full;
  s.eta_charge = eta_charge;
  s.eta_discharge = eta_discharge;
  s.validate();
  return s;
}

std::vector<double> default_prices() {
  std::vector<double> v;
  for (int p = 50; p <= 400; p += 50) v.push_back(p);
  return v;
}

std::vector<double> default_ratios() {
  std::vector<double> v;
  for (int k = 0; k <= 6; ++k) v.push_back(0.5 + 0.25 * k);
  return v;
}

SizingCell evaluate_cell(const std::vector<DatasetDay>& days, double price, double ratio,
                         const SizingSetup& setup) {
  SizingCell cell;
  cell.price = price;
  cell.ratio = ratio;
  const SystemConfig sys = setup.storage.system(setup.pv_capacity, ratio);
  const TariffPolicy pol = build_cre_policy(setup.grid, price, price, setup.pv_capacity, setup.rules);
  SimOptions opts = setup.sim;
  opts.jobs = 1;
  const double nominal = ratio * setup.pv_capacity;
  opts.cycle_capacity = nominal;
  const SimResult res = simulate(days, setup.mode, pol, sys, setup.grid, opts);
  cell.figures = res.figures;
  if (!res.figures.valid) {
    cell.note = std::to_string(res.figures.days_skipped) + " days skipped";
    return cell;
  }
  if (!(res.figures.export_mwh > 0.0)) {
    cell.note = "no exported energy";
    return cell;
  }
  cell.battery_count = battery_count(res.figures.cycles, nominal, setup.econ);
  cell.lcoe = lcoe(res.figures, setup.econ, setup.pv_capacity, nominal);
  cell.net = res.figures.revenue / res.figures.export_mwh - cell.lcoe;
  cell.valid = true;
  return cell;
}

std::vector<ArgmaxEntry> argmax_by_price(const SizingGrid& g) {
  std::vector<ArgmaxEntry> out;
  for (std::size_t p = 0; p < g.prices.size(); ++p) {
    ArgmaxEntry e;
    e.price = g.prices[p];
    for (std::size_t r = 0; r < g.ratios.size(); ++r) {
      const SizingCell& c = g.at(p, r);
      if (!c.valid) continue;
      const bool better = !e.ratio || c.net > e.net ||
                          (c.net == e.net && c.ratio < *e.ratio);
      if (better) {
        e.ratio = c.ratio;
        e.net = c.net;
      }
    }
    out.push_back(e);
  }
  return out;
}

SizingGrid grid_search(const std::vector<DatasetDay>& days, const std::vector<double>& prices,
                       const std::vector<double>& ratios, const SizingSetup& setup) {
  if (prices.empty() || ratios.empty()) throw ConfigError("sizing: empty price or ratio grid");
  setup.econ.validate();
  SizingGrid g;
  g.prices = prices;
  g.ratios = ratios;
  g.cells.resize(prices.size() * ratios.size());
  parallel_for(int(g.cells.size()), setup.sim.jobs, [&](int k) {
    const std::size_t p = std::size_t(k) / ratios.size();
    const std::size_t r = std::size_t(k) % ratios.size();
    g.cells[std::size_t(k)] = evaluate_cell(days, prices[p], ratios[r], setup);
  });
  g.argmax = argmax_by_price(g);
  return g;
}

}  // namespace capfirm

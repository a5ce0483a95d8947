#include "capfirm/qp.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace capfirm {

RepairResult repair_simultaneous_flow(const QpProblem& problem, const Vec& x_in) {
  RepairResult out;
  out.x = x_in;
  Vec& x = out.x;
  const double tol = problem.complementarity_tol;

  std::map<std::pair<int, int>, int> pair_index;
  for (std::size_t k = 0; k < problem.pairs.size(); ++k) {
    const auto& p = problem.pairs[k];
    pair_index[{p.first, p.second}] = int(k);
    pair_index[{p.second, p.first}] = int(k);
  }
  std::vector<bool> covered(problem.pairs.size(), false);

  for (const auto& chain : problem.chains) {
    const std::size_t T = chain.charge.size();
    if (chain.discharge.size() != T || chain.soc.size() != T || (!chain.pv.empty() && chain.pv.size() != T))
      throw ShapeError("repair: storage chain vectors differ in length");
    const double round_trip = chain.eta_charge * chain.eta_discharge;
    const double rise = (1.0 / chain.eta_discharge - chain.eta_charge) * chain.dt_hours;

    for (std::size_t t = 0; t < T; ++t) {
      const int ic = chain.charge[t];
      const int id = chain.discharge[t];
      const auto found = pair_index.find({ic, id});
      if (found != pair_index.end()) covered[std::size_t(found->second)] = true;
      if (std::min(x(ic), x(id)) <= tol) continue;

      // SoC-neutral: charge -a, discharge -eta*a, curtail pv by (1-eta)*a.
      if (!chain.pv.empty() && chain.pv[t] >= 0) {
        const int ip = chain.pv[t];
        double a = std::min(x(ic), x(id) / round_trip);
        if (round_trip < 1.0) {
          const double room = x(ip) - std::max(problem.lower(ip), 0.0);
          a = std::min(a, std::max(room, 0.0) / (1.0 - round_trip));
        }
        if (a > 0.0) {
          const bool clears_charge = a == x(ic);
          x(ic) = clears_charge ? 0.0 : x(ic) - a;
          x(id) = clears_charge ? std::max(x(id) - round_trip * a, 0.0)
                                : (a == x(id) / round_trip ? 0.0 : x(id) - round_trip * a);
          x(ip) -= (1.0 - round_trip) * a;
        }
      }
      if (std::min(x(ic), x(id)) <= tol) continue;

      // Equal reduction; later SoC rises by d * rise and must stay below its bound.
      double d = std::min(x(ic), x(id));
      if (rise > 0.0) {
        double headroom = std::numeric_limits<double>::infinity();
        for (std::size_t k = t; k < T; ++k) {
          const int is = chain.soc[k];
          headroom = std::min(headroom, problem.upper(is) - x(is));
        }
        d = std::min(d, std::max(headroom, 0.0) / rise);
      }
      if (d > 0.0) {
        const double c0 = x(ic), e0 = x(id);
        x(ic) = c0 == d ? 0.0 : c0 - d;
        x(id) = e0 == d ? 0.0 : e0 - d;
        for (std::size_t k = t; k < T; ++k) x(chain.soc[k]) += d * rise;
      }
    }
  }

  for (std::size_t k = 0; k < problem.pairs.size(); ++k) {
    const auto& p = problem.pairs[k];
    if (std::min(x(p.first), x(p.second)) > tol) out.unresolved.push_back(int(k));
  }
  return out;
}

}  // namespace capfirm

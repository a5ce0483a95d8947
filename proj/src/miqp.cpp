#include "capfirm/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>

namespace capfirm {

namespace {

struct Node {
  double bound;
  long id;
  int depth;
  std::vector<int> zeroed;  // variables fixed to zero on the path from the root
};

struct WorseNode {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;  // equal bounds: dive
    return a.id > b.id;
  }
};

/// Index of the pair with the largest min(x_i, x_j); lowest index wins ties.
int most_violated(const QpProblem& p, const Vec& x) {
  int best = -1;
  double worst = p.complementarity_tol;
  for (std::size_t k = 0; k < p.pairs.size(); ++k) {
    const double v = std::min(x(p.pairs[k].first), x(p.pairs[k].second));
    if (v > worst) {
      worst = v;
      best = int(k);
    }
  }
  return best;
}

}  // namespace

QpSolution solve_miqp(const QpProblem& problem, const MiqpOptions& options) {
  problem.validate();
  if (problem.pairs.empty()) return solve_qp(problem, options.qp);

  QpSolution root = solve_qp(problem, options.qp);
  if (!has_solution(root.status)) return root;

  BranchStats stats;
  stats.root_bound = root.objective;
  std::optional<QpSolution> incumbent;
  bool root_complementary = most_violated(problem, root.x) < 0;
  bool found_by_repair = false;

  auto gap_abs = [&](double value) { return options.gap_tol * (1.0 + std::abs(value)); };
  auto offer = [&](const QpSolution& candidate, bool by_repair) {
    if (!incumbent || candidate.objective < incumbent->objective) {
      incumbent = candidate;
      found_by_repair = by_repair;
    }
  };

  // Returns true when the node needs branching.
  auto examine = [&](const QpSolution& sol) {
    if (most_violated(problem, sol.x) < 0) {
      offer(sol, false);
      return false;
    }
    if (options.repair && !problem.chains.empty()) {
      ++stats.repairs_tried;
      RepairResult rep = repair_simultaneous_flow(problem, sol.x);
      const double base = problem.max_violation(sol.x);
      if (rep.unresolved.empty() &&
          problem.max_violation(rep.x) <= std::max(1e-6, 2.0 * base + 1e-9)) {
        ++stats.repairs_succeeded;
        QpSolution repaired = sol;
        repaired.x = std::move(rep.x);
        repaired.objective = problem.objective(repaired.x);
        offer(repaired, true);
        if (repaired.objective <= sol.objective + gap_abs(repaired.objective)) return false;
      }
    }
    return true;
  };

  std::priority_queue<Node, std::vector<Node>, WorseNode> open;
  long next_id = 0;
  auto push_children = [&](const QpSolution& sol, const Node& parent) {
    const int k = most_violated(problem, sol.x);
    for (int side = 0; side < 2; ++side) {
      Node child{sol.objective, next_id++, parent.depth + 1, parent.zeroed};
      child.zeroed.push_back(side == 0 ? problem.pairs[std::size_t(k)].first
                                       : problem.pairs[std::size_t(k)].second);
      open.push(std::move(child));
    }
  };

  stats.nodes = 1;
  const Node root_node{root.objective, next_id++, 0, {}};
  if (examine(root)) push_children(root, root_node);

  bool hit_limit = false;
  while (!open.empty()) {
    if (incumbent && open.top().bound >= incumbent->objective - gap_abs(incumbent->objective)) break;
    if (stats.nodes >= options.node_limit) {
      hit_limit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    QpProblem sub = problem;
    bool empty = false;
    for (int j : node.zeroed) {
      sub.upper(j) = std::min(sub.upper(j), 0.0);
      empty = empty || sub.lower(j) > 0.0;
    }
    ++stats.nodes;
    stats.max_depth = std::max(stats.max_depth, node.depth);
    if (empty) continue;
    const QpSolution sol = solve_qp(sub, options.qp);
    if (!has_solution(sol.status)) continue;
    if (incumbent && sol.objective >= incumbent->objective - gap_abs(incumbent->objective)) continue;
    if (examine(sol)) push_children(sol, node);
  }

  double best_bound = incumbent ? incumbent->objective : std::numeric_limits<double>::infinity();
  if (!open.empty()) best_bound = std::min(best_bound, open.top().bound);
  stats.best_bound = best_bound;

  if (!incumbent) {
    QpSolution out = root;
    out.status = hit_limit ? QpStatus::NodeLimitNoIncumbent : QpStatus::Infeasible;
    stats.gap = std::numeric_limits<double>::infinity();
    out.branch = stats;
    return out;
  }
  QpSolution out = *incumbent;
  stats.gap = out.objective - best_bound;
  stats.bound_consistent = root.objective <= out.objective + 1e-9 * (1.0 + std::abs(out.objective));
  if (hit_limit && stats.gap > gap_abs(out.objective)) out.status = QpStatus::NodeLimitIncumbent;
  else if (root_complementary) out.status = QpStatus::Optimal;
  else if (found_by_repair && stats.nodes == 1) out.status = QpStatus::RepairedOptimal;
  else out.status = QpStatus::Optimal;
  out.branch = stats;
  return out;
}

}  // namespace capfirm

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <string>
#include <vector>

#include "capfirm/domain.hpp"

namespace capfirm {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

/// At most one of the two variables may be strictly positive.
struct ComplementarityPair {
  int first = -1;
  int second = -1;
};

/// Describes a storage device embedded in a problem so that simultaneous
/// charge/discharge can be repaired without re-solving. Vectors are indexed by
/// period and hold variable indices; `pv` may be empty when there is no
/// curtailable source in the balance. SoC bounds are read from the variable
/// bounds of `soc`.
struct StorageChain {
  std::vector<int> charge;
  std::vector<int> discharge;
  std::vector<int> soc;
  std::vector<int> pv;
  double eta_charge = 1.0;
  double eta_discharge = 1.0;
  double dt_hours = 1.0;
};

/// min  sum_i quad_i * x_i^2 + lin^T x
/// s.t. ineq * x <= ineq_rhs,  eq * x == eq_rhs,  lower <= x <= upper,
///      min(x_i, x_j) == 0 for every complementarity pair.
struct QpProblem {
  Vec quad;
  Vec lin;
  SparseRows ineq;
  Vec ineq_rhs;
  SparseRows eq;
  Vec eq_rhs;
  Vec lower;
  Vec upper;
  std::vector<ComplementarityPair> pairs;
  double complementarity_tol = 1e-6;
  std::vector<StorageChain> chains;

  int size() const { return static_cast<int>(lin.size()); }
  double objective(const Vec& x) const;
  /// Largest absolute violation of bounds, inequalities and equalities.
  double max_violation(const Vec& x) const;
  /// Largest min(x_i, x_j) over the complementarity pairs (0 when none).
  double max_complementarity(const Vec& x) const;
  void validate() const;
};

/// Convenience builder collecting rows as triplets.
class QpBuilder {
 public:
  int add_variable(double lower, double upper, double lin = 0.0, double quad = 0.0);
  void add_le(const std::vector<std::pair<int, double>>& row, double rhs);
  void add_eq(const std::vector<std::pair<int, double>>& row, double rhs);
  QpProblem build() &&;

  int variables() const { return static_cast<int>(lower_.size()); }
  int inequality_rows() const { return ineq_rows_; }
  int equality_rows() const { return eq_rows_; }

  std::vector<ComplementarityPair> pairs;
  std::vector<StorageChain> chains;
  double complementarity_tol = 1e-6;

 private:
  std::vector<double> lower_, upper_, lin_, quad_;
  std::vector<Triplet> ineq_, eq_;
  std::vector<double> ineq_rhs_, eq_rhs_;
  int ineq_rows_ = 0;
  int eq_rows_ = 0;
};

enum class QpStatus {
  Optimal,
  RepairedOptimal,       // relaxation optimum turned complementary by repair
  NodeLimitIncumbent,    // node limit hit, best complementary point returned
  NodeLimitNoIncumbent,  // node limit hit before any complementary point was found
  Infeasible,
  Unbounded,
  NumericalFailure,
};

std::string to_string(QpStatus status);
bool has_solution(QpStatus status);

/// Scaled residuals of the returned point (relative to data magnitude).
struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct BranchStats {
  int nodes = 0;
  int max_depth = 0;
  int repairs_tried = 0;
  int repairs_succeeded = 0;
  double root_bound = 0.0;
  double best_bound = 0.0;
  double gap = 0.0;
  bool bound_consistent = true;  // root relaxation <= incumbent
};

struct QpSolution {
  Vec x;
  double objective = 0.0;
  QpStatus status = QpStatus::NumericalFailure;
  KktResiduals kkt;
  double certificate = 0.0;  // Farkas / recession residual for infeasible or unbounded
  int iterations = 0;
  BranchStats branch;
};

struct QpOptions {
  int max_iterations = 200;
  double tolerance = 1e-9;
  double complementarity = 1e-11;  // average x*z after objective normalisation
};

/// Convex QP by a primal-dual interior point method (Mehrotra predictor-corrector)
/// on the sparse quasi-definite KKT system. Complementarity pairs are ignored.
QpSolution solve_qp(const QpProblem& problem, const QpOptions& options = {});

struct MiqpOptions {
  int node_limit = 1000;
  bool repair = true;
  double gap_tol = 1e-6;  // relative: gap <= gap_tol * (1 + |incumbent|)
  QpOptions qp;
};

/// Complementarity branch-and-bound with best-bound node selection.
QpSolution solve_miqp(const QpProblem& problem, const MiqpOptions& options = {});

struct RepairResult {
  Vec x;
  std::vector<int> unresolved;  // indices into problem.pairs still violated
};

/// Removes simultaneous charge/discharge along each storage chain while keeping
/// every coupling-point balance unchanged.
///
/// Per violating period the repair first lowers charge by a and discharge by
/// eta_c*eta_d*a while curtailing pv by (1 - eta_c*eta_d)*a, which leaves the SoC
/// trajectory untouched. Whatever remains is reduced equally by d, raising every
/// later SoC by d*(1/eta_d - eta_c)*dt; d is capped by the smallest SoC headroom
/// from that period to the end. Pairs not covered by a chain are left alone.
RepairResult repair_simultaneous_flow(const QpProblem& problem, const Vec& x);

/// Dense text dump of a problem for offline inspection; see README for the layout.
void write_problem_dump(std::ostream& os, const QpProblem& problem);

}  // namespace capfirm

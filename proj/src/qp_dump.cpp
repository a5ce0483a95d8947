#include "capfirm/qp.hpp"

#include <iomanip>
#include <ostream>

namespace capfirm {

namespace {

void write_vector(std::ostream& os, const char* name, const Vec& v) {
  os << "[" << name << "] " << v.size() << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
  os << "\n";
}

void write_matrix(std::ostream& os, const char* name, const SparseRows& m) {
  os << "[" << name << "] " << m.rows() << " " << m.cols() << "\n";
  const Mat dense(m);
  for (Eigen::Index r = 0; r < dense.rows(); ++r) {
    for (Eigen::Index c = 0; c < dense.cols(); ++c) os << (c ? " " : "") << dense(r, c);
    os << "\n";
  }
}

}  // namespace

void write_problem_dump(std::ostream& os, const QpProblem& p) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "# capfirm qp dump\n";
  write_vector(os, "quad", p.quad);
  write_vector(os, "lin", p.lin);
  write_matrix(os, "ineq", p.ineq);
  write_vector(os, "ineq_rhs", p.ineq_rhs);
  write_matrix(os, "eq", p.eq);
  write_vector(os, "eq_rhs", p.eq_rhs);
  write_vector(os, "lower", p.lower);
  write_vector(os, "upper", p.upper);
  os << "[pairs] " << p.pairs.size() << "\n";
  for (const auto& pr : p.pairs) os << pr.first << " " << pr.second << "\n";
  os << "[end]\n";
  os.flags(flags);
  os.precision(prec);
}

}  // namespace capfirm

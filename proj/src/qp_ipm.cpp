#include "capfirm/qp.hpp"

#include <cstdio>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace capfirm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

// ---------------------------------------------------------------------------
// QpProblem / QpBuilder

double QpProblem::objective(const Vec& x) const {
  return (quad.array() * x.array().square()).sum() + lin.dot(x);
}

double QpProblem::max_violation(const Vec& x) const {
  double v = 0.0;
  for (int j = 0; j < size(); ++j) {
    v = std::max(v, lower(j) - x(j));
    v = std::max(v, x(j) - upper(j));
  }
  if (ineq.rows()) v = std::max(v, (ineq * x - ineq_rhs).maxCoeff());
  if (eq.rows()) v = std::max(v, inf_norm(eq * x - eq_rhs));
  return v;
}

double QpProblem::max_complementarity(const Vec& x) const {
  double v = 0.0;
  for (const auto& p : pairs) v = std::max(v, std::min(x(p.first), x(p.second)));
  return v;
}

void QpProblem::validate() const {
  const int n = size();
  if (quad.size() != n || lower.size() != n || upper.size() != n)
    throw ShapeError("QpProblem: variable vectors differ in length");
  if (ineq.cols() != n || ineq.rows() != ineq_rhs.size())
    throw ShapeError("QpProblem: inequality block has wrong shape");
  if (eq.cols() != n || eq.rows() != eq_rhs.size())
    throw ShapeError("QpProblem: equality block has wrong shape");
  if ((quad.array() < 0.0).any()) throw DomainError("QpProblem: negative quadratic coefficient");
  for (int j = 0; j < n; ++j)
    if (lower(j) > upper(j)) throw DomainError("QpProblem: lower bound above upper bound");
  for (const auto& p : pairs) {
    if (p.first < 0 || p.first >= n || p.second < 0 || p.second >= n || p.first == p.second)
      throw ShapeError("QpProblem: complementarity pair index out of range");
    if (lower(p.first) < 0.0 || lower(p.second) < 0.0)
      throw DomainError("QpProblem: complementarity pairs need nonnegative variables");
  }
}

int QpBuilder::add_variable(double lower, double upper, double lin, double quad) {
  lower_.push_back(lower);
  upper_.push_back(upper);
  lin_.push_back(lin);
  quad_.push_back(quad);
  return static_cast<int>(lower_.size()) - 1;
}

void QpBuilder::add_le(const std::vector<std::pair<int, double>>& row, double rhs) {
  for (const auto& [j, a] : row) ineq_.emplace_back(ineq_rows_, j, a);
  ineq_rhs_.push_back(rhs);
  ++ineq_rows_;
}

void QpBuilder::add_eq(const std::vector<std::pair<int, double>>& row, double rhs) {
  for (const auto& [j, a] : row) eq_.emplace_back(eq_rows_, j, a);
  eq_rhs_.push_back(rhs);
  ++eq_rows_;
}

QpProblem QpBuilder::build() && {
  const int n = variables();
  QpProblem p;
  p.lower = Eigen::Map<const Vec>(lower_.data(), n);
  p.upper = Eigen::Map<const Vec>(upper_.data(), n);
  p.lin = Eigen::Map<const Vec>(lin_.data(), n);
  p.quad = Eigen::Map<const Vec>(quad_.data(), n);
  p.ineq.resize(ineq_rows_, n);
  p.ineq.setFromTriplets(ineq_.begin(), ineq_.end());
  p.ineq_rhs = Eigen::Map<const Vec>(ineq_rhs_.data(), ineq_rows_);
  p.eq.resize(eq_rows_, n);
  p.eq.setFromTriplets(eq_.begin(), eq_.end());
  p.eq_rhs = Eigen::Map<const Vec>(eq_rhs_.data(), eq_rows_);
  p.pairs = std::move(pairs);
  p.chains = std::move(chains);
  p.complementarity_tol = complementarity_tol;
  return p;
}

std::string to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::RepairedOptimal: return "relaxation-optimal-repaired";
    case QpStatus::NodeLimitIncumbent: return "node-limit-incumbent";
    case QpStatus::NodeLimitNoIncumbent: return "node-limit-no-incumbent";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::Unbounded: return "unbounded";
    case QpStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

bool has_solution(QpStatus status) {
  return status == QpStatus::Optimal || status == QpStatus::RepairedOptimal ||
         status == QpStatus::NodeLimitIncumbent;
}

// ---------------------------------------------------------------------------
// Interior point method

namespace {

/// Problem after removing fixed variables and empty rows; objective normalised.
struct Reduced {
  std::vector<int> keep;  // reduced index -> original index
  Vec x_full;             // original-length point carrying fixed values
  Vec h2;                 // Hessian diagonal
  Vec c;
  SparseRows A;
  Vec b;
  SparseRows G;
  Vec h;
  Vec lo, hi;
  double obj_scale = 1.0;
  bool infeasible = false;
};

Reduced presolve(const QpProblem& p) {
  const int n0 = p.size();
  Reduced r;
  r.x_full = Vec::Zero(n0);
  std::vector<int> map(std::size_t(n0), -1);
  for (int j = 0; j < n0; ++j) {
    const double lo = p.lower(j), hi = p.upper(j);
    if (lo > hi + 1e-12 * std::max(1.0, std::abs(lo))) {
      r.infeasible = true;
      r.x_full(j) = lo;
    } else if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-12 * std::max(1.0, std::abs(lo))) {
      r.x_full(j) = lo;
    } else {
      map[std::size_t(j)] = int(r.keep.size());
      r.keep.push_back(j);
    }
  }
  const int n = int(r.keep.size());

  auto reduce_rows = [&](const SparseRows& M, const Vec& rhs, bool equality, SparseRows& out,
                         Vec& out_rhs) {
    std::vector<Triplet> trip;
    std::vector<double> keep_rhs;
    int rows = 0;
    for (int i = 0; i < M.rows(); ++i) {
      double adj = rhs(i);
      bool any = false;
      double row_scale = std::abs(rhs(i));
      for (SparseRows::InnerIterator it(M, i); it; ++it) {
        const int j = int(it.col());
        if (it.value() == 0.0) continue;
        if (map[std::size_t(j)] < 0) {
          adj -= it.value() * r.x_full(j);
          row_scale = std::max(row_scale, std::abs(it.value() * r.x_full(j)));
        } else {
          any = true;
        }
      }
      if (!any) {
        const double tol = 1e-9 * (1.0 + row_scale);
        if (equality ? std::abs(adj) > tol : adj < -tol) r.infeasible = true;
        continue;
      }
      for (SparseRows::InnerIterator it(M, i); it; ++it)
        if (it.value() != 0.0 && map[std::size_t(it.col())] >= 0)
          trip.emplace_back(rows, map[std::size_t(it.col())], it.value());
      keep_rhs.push_back(adj);
      ++rows;
    }
    out.resize(rows, n);
    out.setFromTriplets(trip.begin(), trip.end());
    out_rhs = Eigen::Map<const Vec>(keep_rhs.data(), rows);
  };
  reduce_rows(p.ineq, p.ineq_rhs, false, r.A, r.b);
  reduce_rows(p.eq, p.eq_rhs, true, r.G, r.h);

  r.h2.resize(n);
  r.c.resize(n);
  r.lo.resize(n);
  r.hi.resize(n);
  for (int k = 0; k < n; ++k) {
    const int j = r.keep[std::size_t(k)];
    r.h2(k) = 2.0 * p.quad(j);
    r.c(k) = p.lin(j);
    r.lo(k) = p.lower(j);
    r.hi(k) = p.upper(j);
  }
  const double scale = std::max(inf_norm(r.h2), inf_norm(r.c));
  r.obj_scale = scale > 0.0 ? scale : 1.0;
  r.h2 /= r.obj_scale;
  r.c /= r.obj_scale;
  return r;
}

/// Lower triangle of [[H + A^T D A + diag, G^T], [G, -delta I]] with a fixed pattern.
class KktSystem {
 public:
  KktSystem(const Reduced& r) : r_(r), n_(int(r.keep.size())), me_(int(r.G.rows())) {
    const int N = n_ + me_;
    std::vector<Triplet> trip;
    for (int j = 0; j < N; ++j) trip.emplace_back(j, j, 0.0);
    for (int i = 0; i < r.A.rows(); ++i)
      for (SparseRows::InnerIterator a(r.A, i); a; ++a)
        for (SparseRows::InnerIterator b(r.A, i); b; ++b)
          if (b.col() > a.col()) trip.emplace_back(int(b.col()), int(a.col()), 0.0);
    for (int i = 0; i < me_; ++i)
      for (SparseRows::InnerIterator g(r.G, i); g; ++g)
        trip.emplace_back(n_ + i, int(g.col()), 0.0);
    K_.resize(N, N);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();

    for (int j = 0; j < N; ++j) diag_pos_.push_back(position(j, j));
    for (int i = 0; i < r.A.rows(); ++i)
      for (SparseRows::InnerIterator a(r.A, i); a; ++a)
        for (SparseRows::InnerIterator b(r.A, i); b; ++b) {
          if (b.col() < a.col()) continue;
          contrib_.push_back({position(int(b.col()), int(a.col())), i, a.value() * b.value()});
        }
    for (int i = 0; i < me_; ++i)
      for (SparseRows::InnerIterator g(r.G, i); g; ++g)
        g_pos_.push_back({position(n_ + i, int(g.col())), i, g.value()});
    ldlt_.analyzePattern(K_);
  }

  bool factorize(const Vec& dx, const Vec& ds, double reg_primal, double reg_dual) {
    dx_ = dx;
    ds_ = ds;
    double* v = K_.valuePtr();
    std::fill(v, v + K_.nonZeros(), 0.0);
    for (int j = 0; j < n_; ++j) v[diag_pos_[std::size_t(j)]] = r_.h2(j) + dx(j) + reg_primal;
    for (int i = 0; i < me_; ++i) v[diag_pos_[std::size_t(n_ + i)]] = -reg_dual;
    for (const auto& c : contrib_) v[c.pos] += ds(c.row) * c.coef;
    for (const auto& g : g_pos_) v[g.pos] = g.coef;
    ldlt_.factorize(K_);
    return ldlt_.info() == Eigen::Success;
  }

  /// Solves the unregularised system with a few refinement sweeps.
  Vec solve(const Vec& rhs) const {
    Vec sol = ldlt_.solve(rhs);
    for (int it = 0; it < 4; ++it) {
      const Vec res = rhs - apply(sol);
      if (inf_norm(res) <= 1e-13 * (1.0 + inf_norm(rhs))) break;
      sol += ldlt_.solve(res);
    }
    return sol;
  }

 private:
  struct Contribution {
    Eigen::Index pos;
    int row;
    double coef;
  };

  Eigen::Index position(int row, int col) const {
    const int* inner = K_.innerIndexPtr();
    const int* begin = inner + K_.outerIndexPtr()[col];
    const int* end = inner + K_.outerIndexPtr()[col + 1];
    const int* it = std::lower_bound(begin, end, row);
    return it - inner;
  }

  Vec apply(const Vec& v) const {
    const Vec x = v.head(n_);
    Vec out(n_ + me_);
    Vec top = (r_.h2.array() + dx_.array()) * x.array();
    if (r_.A.rows()) top += r_.A.transpose() * (ds_.asDiagonal() * (r_.A * x));
    if (me_) {
      const Vec y = v.tail(me_);
      top += r_.G.transpose() * y;
      out.tail(me_) = r_.G * x;
    }
    out.head(n_) = top;
    return out;
  }

  const Reduced& r_;
  int n_;
  int me_;
  Eigen::SparseMatrix<double> K_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  std::vector<Eigen::Index> diag_pos_;
  std::vector<Contribution> contrib_;
  std::vector<Contribution> g_pos_;
  Vec dx_, ds_;
};

struct Direction {
  Vec x, y, s, lam, zl, zu;
};

double max_step(const Vec& v, const Vec& dv) {
  double a = kInf;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  return a;
}

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const QpOptions& options) {
  problem.validate();
  Reduced r = presolve(problem);
  QpSolution sol;
  if (r.infeasible) {
    sol.status = QpStatus::Infeasible;
    sol.x = r.x_full;
    sol.objective = problem.objective(sol.x);
    return sol;
  }

  const int n = int(r.keep.size());
  const int mi = int(r.A.rows());
  const int me = int(r.G.rows());
  auto finish = [&](const Vec& xr, QpStatus status) {
    sol.x = r.x_full;
    for (int k = 0; k < n; ++k) sol.x(r.keep[std::size_t(k)]) = xr(k);
    sol.status = status;
    sol.objective = problem.objective(sol.x);
    return sol;
  };
  if (n == 0) {
    sol.kkt = {};
    return finish(Vec(), QpStatus::Optimal);
  }

  const MaskX has_lo = r.lo.array().isFinite();
  const MaskX has_hi = r.hi.array().isFinite();
  const Vec lo0 = has_lo.select(r.lo, 0.0);
  const Vec hi0 = has_hi.select(r.hi, 0.0);
  const double nlo = has_lo.count(), nhi = has_hi.count();
  const double ncomp = mi + nlo + nhi;

  // Interior starting point.
  Vec x(n);
  for (int j = 0; j < n; ++j) {
    if (has_lo(j) && has_hi(j)) x(j) = 0.5 * (r.lo(j) + r.hi(j));
    else if (has_lo(j)) x(j) = r.lo(j) + 1.0;
    else if (has_hi(j)) x(j) = r.hi(j) - 1.0;
    else x(j) = 0.0;
  }
  Vec s = mi ? Vec((r.b - r.A * x).cwiseMax(1.0)) : Vec();
  Vec lam = Vec::Ones(mi);
  Vec zl = has_lo.select(Vec::Ones(n), 0.0);
  Vec zu = has_hi.select(Vec::Ones(n), 0.0);
  Vec y = Vec::Zero(me);

  const double bnorm = std::max(inf_norm(r.b), inf_norm(r.h));
  const double cnorm = inf_norm(r.c);
  KktSystem kkt(r);

  auto wl_of = [&](const Vec& xx) -> Vec { return has_lo.select(xx - lo0, 1.0); };
  auto wu_of = [&](const Vec& xx) -> Vec { return has_hi.select(hi0 - xx, 1.0); };

  int stalls = 0;
  // Last iterate meeting the residual tolerances; the absolute complementarity
  // target can push the KKT system past double precision, in which case the
  // iteration degrades and this point is returned instead.
  std::optional<std::pair<Vec, KktResiduals>> converged;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    sol.iterations = iter;
    const Vec wl = wl_of(x);
    const Vec wu = wu_of(x);

    Vec rd = r.h2.cwiseProduct(x) + r.c - zl + zu;
    if (mi) rd += r.A.transpose() * lam;
    if (me) rd += r.G.transpose() * y;
    const Vec rp = mi ? Vec(r.A * x + s - r.b) : Vec();
    const Vec re = me ? Vec(r.G * x - r.h) : Vec();

    const double comp = (mi ? s.dot(lam) : 0.0) + (has_lo.select(wl.cwiseProduct(zl), 0.0)).sum() +
                        (has_hi.select(wu.cwiseProduct(zu), 0.0)).sum();
    const double mu = ncomp > 0 ? comp / ncomp : 0.0;
    const double pobj = 0.5 * x.dot(r.h2.cwiseProduct(x)) + r.c.dot(x);
    sol.kkt.primal = std::max(inf_norm(rp) / (1.0 + inf_norm(r.b)), inf_norm(re) / (1.0 + inf_norm(r.h)));
    sol.kkt.dual = inf_norm(rd) / (1.0 + cnorm);
    sol.kkt.gap = comp / (1.0 + std::abs(pobj));

    // The average product is also bounded in absolute terms so that variables
    // sitting at a bound come out numerically zero, not merely small.
    if (!std::isfinite(mu) || !std::isfinite(sol.kkt.primal) || !std::isfinite(sol.kkt.dual)) break;
    if (sol.kkt.primal <= options.tolerance && sol.kkt.dual <= options.tolerance &&
        sol.kkt.gap <= options.tolerance) {
      if (mu <= options.complementarity) return finish(x, QpStatus::Optimal);
      converged.emplace(x, sol.kkt);
    } else if (converged && sol.kkt.primal > options.tolerance) {
      break;
    }

    // Farkas ray: A^T lam + G^T y - zl + zu ~ 0 with b^T lam + h^T y - lo^T zl + hi^T zu < 0.
    const double dual_norm = std::max({inf_norm(lam), inf_norm(zl), inf_norm(zu), inf_norm(y)});
    if (dual_norm > 1e6) {
      Vec ray = zu - zl;
      if (mi) ray += r.A.transpose() * lam;
      if (me) ray += r.G.transpose() * y;
      const double value = ((mi ? r.b.dot(lam) : 0.0) + (me ? r.h.dot(y) : 0.0) - lo0.dot(zl) +
                            hi0.dot(zu)) / dual_norm;
      const double res = inf_norm(ray) / dual_norm;
      if (res <= 1e-8 * (1.0 + inf_norm(x)) && value < -1e-9 * (1.0 + bnorm)) {
        sol.certificate = res;
        return finish(x, QpStatus::Infeasible);
      }
    }
    // Recession direction of the primal: feasible, flat curvature, descending cost.
    const double xnorm = inf_norm(x);
    if (xnorm > 1e9 * (1.0 + bnorm)) {
      const Vec d = x / xnorm;
      double viol = inf_norm(r.h2.cwiseProduct(d));
      if (mi) viol = std::max(viol, (r.A * d).maxCoeff());
      if (me) viol = std::max(viol, inf_norm(r.G * d));
      if (viol <= 1e-7 && r.c.dot(d) < -1e-9) {
        sol.certificate = viol;
        return finish(x, QpStatus::Unbounded);
      }
    }
#ifdef CAPFIRM_IPM_TRACE
    std::fprintf(stderr, "it %d mu %.3e p %.2e d %.2e g %.2e\n", iter, mu, sol.kkt.primal, sol.kkt.dual, sol.kkt.gap);
#endif
    if (iter == options.max_iterations || stalls >= 8) break;

    const Vec ds = mi ? Vec(lam.cwiseQuotient(s)) : Vec();
    const Vec dxd = has_lo.select(zl.cwiseQuotient(wl), 0.0) + has_hi.select(zu.cwiseQuotient(wu), 0.0);
    // Quasi-definite pivots can cancel under a fill-reducing order; escalate the
    // regularisation until the factorisation goes through. Refinement runs against
    // the unregularised operator, so the directions stay accurate.
    bool factored = false;
    for (double reg = 1e-10; reg <= 1e-4 && !factored; reg *= 100.0) factored = kkt.factorize(dxd, ds, reg, reg);
    if (!factored) {
#ifdef CAPFIRM_IPM_TRACE
      std::fprintf(stderr, "factorization failed\n");
#endif
      break;
    }

    auto newton = [&](const Vec& r_s, const Vec& r_l, const Vec& r_u) {
      Vec rhs(n + me);
      Vec top = -rd - has_lo.select(r_l.cwiseQuotient(wl), 0.0) + has_hi.select(r_u.cwiseQuotient(wu), 0.0);
      if (mi) top -= r.A.transpose() * ((-r_s + lam.cwiseProduct(rp)).cwiseQuotient(s));
      rhs.head(n) = top;
      if (me) rhs.tail(me) = -re;
      const Vec v = kkt.solve(rhs);
      Direction d;
      d.x = v.head(n);
      d.y = v.tail(me);
      if (mi) {
        d.s = -rp - r.A * d.x;
        d.lam = (-r_s - lam.cwiseProduct(d.s)).cwiseQuotient(s);
      }
      d.zl = has_lo.select((-r_l - zl.cwiseProduct(d.x)).cwiseQuotient(wl), 0.0);
      d.zu = has_hi.select((-r_u + zu.cwiseProduct(d.x)).cwiseQuotient(wu), 0.0);
      return d;
    };
    auto step_length = [&](const Direction& d) {
      double a = 1.0;
      if (mi) a = std::min({a, max_step(s, d.s), max_step(lam, d.lam)});
      a = std::min(a, max_step(has_lo.select(wl, kInf), has_lo.select(d.x, 0.0)));
      a = std::min(a, max_step(has_hi.select(wu, kInf), has_hi.select(-d.x, 0.0)));
      a = std::min(a, max_step(has_lo.select(zl, kInf), d.zl));
      a = std::min(a, max_step(has_hi.select(zu, kInf), d.zu));
      return a;
    };

    // Predictor.
    const Vec rs_aff = mi ? Vec(s.cwiseProduct(lam)) : Vec();
    const Vec rl_aff = has_lo.select(wl.cwiseProduct(zl), 0.0);
    const Vec ru_aff = has_hi.select(wu.cwiseProduct(zu), 0.0);
    const Direction aff = newton(rs_aff, rl_aff, ru_aff);
    const double a_aff = step_length(aff);
    double comp_aff = has_lo.select((wl + a_aff * aff.x).cwiseProduct(zl + a_aff * aff.zl), 0.0).sum() +
                      has_hi.select((wu - a_aff * aff.x).cwiseProduct(zu + a_aff * aff.zu), 0.0).sum();
    if (mi) comp_aff += (s + a_aff * aff.s).dot(lam + a_aff * aff.lam);
    const double mu_aff = comp_aff / ncomp;
    const double sigma = mu > 0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;

    // Corrector.
    const double target = sigma * mu;
    const Vec rs = mi ? Vec((rs_aff + aff.s.cwiseProduct(aff.lam)).array() - target) : Vec();
    const Vec rl = has_lo.select((rl_aff + aff.x.cwiseProduct(aff.zl)).array() - target, 0.0);
    const Vec ru = has_hi.select((ru_aff - aff.x.cwiseProduct(aff.zu)).array() - target, 0.0);
    const Direction d = newton(rs, rl, ru);
    const double a_max = step_length(d);
    const double alpha = std::min(1.0, 0.995 * a_max);
    stalls = alpha < 1e-10 ? stalls + 1 : 0;

    x += alpha * d.x;
    y += alpha * d.y;
    if (mi) {
      s += alpha * d.s;
      lam += alpha * d.lam;
    }
    zl += alpha * d.zl;
    zu += alpha * d.zu;
  }

  if (converged) {
    sol.kkt = converged->second;
    return finish(converged->first, QpStatus::Optimal);
  }
  // No clean termination: accept the point if it meets the published contract.
  if (sol.kkt.primal <= 1e-6 && sol.kkt.dual <= 1e-6 && sol.kkt.gap <= 1e-6)
    return finish(x, QpStatus::Optimal);
  if (sol.kkt.primal > 1e-6) {
    sol.certificate = sol.kkt.primal;
    return finish(x, QpStatus::Infeasible);
  }
  return finish(x, QpStatus::NumericalFailure);
}

}  // namespace capfirm

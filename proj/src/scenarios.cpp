#include "capfirm/scenarios.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>

namespace capfirm {

double std_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("std_normal_quantile: argument outside (0, 1)");

  // Acklam's rational approximation, then one Halley step on the exact cdf.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;

  double x;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Work on the smaller tail so the residual keeps its relative precision.
  const double e = u < 0.5 ? std_normal_cdf(x) - u : (1.0 - u) - std_normal_cdf(-x);
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
  const double step = e / pdf;
  return x - step / (1.0 + 0.5 * x * step);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed + (stream + 1) * 0x9E3779B97F4A7C15ull);
}

double ErrorMarginal::quantile(double u) const {
  const Eigen::Index m = sorted.size();
  if (m == 0) return 0.0;
  const double h = u * double(m) - 0.5;
  if (h <= 0.0) return sorted(0);
  if (h >= double(m - 1)) return sorted(m - 1);
  const auto k = static_cast<Eigen::Index>(std::floor(h));
  const double w = h - double(k);
  return sorted(k) + w * (sorted(k + 1) - sorted(k));
}

Mat normal_scores(const Mat& samples) {
  const Eigen::Index n = samples.rows();
  Mat scores(n, samples.cols());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < samples.cols(); ++k) {
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return samples(i, k) < samples(j, k); });
    for (Eigen::Index i = 0; i < n;) {
      Eigen::Index j = i;
      while (j + 1 < n && samples(order[j + 1], k) == samples(order[i], k)) ++j;
      const double mid_rank = 0.5 * double(i + j) + 1.0;  // 1-based, ties share the mean rank
      const double score = std_normal_quantile((mid_rank - 0.5) / double(n));
      for (Eigen::Index r = i; r <= j; ++r) scores(order[r], k) = score;
      i = j + 1;
    }
  }
  return scores;
}

Mat repair_correlation(const Mat& corr, double floor) {
  Mat r = 0.5 * (corr + corr.transpose());
  r = r.cwiseMax(-1.0).cwiseMin(1.0);
  r.diagonal().setOnes();
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(r);
    if (eig.eigenvalues().minCoeff() >= floor) break;
    // Floor a little above the target so renormalising the diagonal keeps us above it.
    const Vec lam = eig.eigenvalues().cwiseMax(2.0 * floor);
    r = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    const Vec inv_sd = r.diagonal().cwiseSqrt().cwiseInverse();
    r = inv_sd.asDiagonal() * r * inv_sd.asDiagonal();
    r = 0.5 * (r + r.transpose());
    r.diagonal().setOnes();
  }
  return r;
}

CopulaModel fit_copula(const Mat& errors, double pv_capacity, const CopulaFitOptions& options) {
  if (errors.rows() < options.min_days)
    throw DataError("fit_copula: need at least " + std::to_string(options.min_days) +
                    " days of history, got " + std::to_string(errors.rows()));
  if (!errors.allFinite()) throw DataError("fit_copula: non-finite forecast errors");
  if (!(pv_capacity > 0.0)) throw ConfigError("fit_copula: PV capacity must be positive");

  const Eigen::Index n = errors.rows();
  const Eigen::Index T = errors.cols();
  CopulaModel model;
  model.marginals.resize(static_cast<std::size_t>(T));
  std::vector<Eigen::Index> active;
  for (Eigen::Index k = 0; k < T; ++k) {
    auto& m = model.marginals[std::size_t(k)];
    m.lead_time = int(k);
    m.sorted = errors.col(k);
    std::sort(m.sorted.begin(), m.sorted.end());
    const double mean = m.sorted.mean();
    const double sd = std::sqrt((m.sorted.array() - mean).square().sum() / double(n - 1));
    m.degenerate = sd < options.degenerate_rel_std * pv_capacity;
    if (!m.degenerate) active.push_back(k);
  }

  Mat corr = Mat::Identity(T, T);
  if (!active.empty()) {
    Mat sub(n, Eigen::Index(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) sub.col(Eigen::Index(j)) = errors.col(active[j]);
    Mat scores = normal_scores(sub);
    scores.rowwise() -= scores.colwise().mean();
    const Mat cov = scores.transpose() * scores;
    const Vec inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
    const Mat sub_corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
    for (std::size_t i = 0; i < active.size(); ++i)
      for (std::size_t j = 0; j < active.size(); ++j)
        corr(active[i], active[j]) = sub_corr(Eigen::Index(i), Eigen::Index(j));
  }
  model.correlation = repair_correlation(corr, options.eigen_floor);
  Eigen::LLT<Mat> llt(model.correlation);
  if (llt.info() != Eigen::Success) throw SolverError("fit_copula: correlation is not positive definite");
  model.cholesky = llt.matrixL();
  return model;
}

ScenarioSet ScenarioSet::single(const Vec& profile) {
  ScenarioSet s;
  s.values = profile.transpose();
  s.weights = Vec::Ones(1);
  return s;
}

Mat sample_copula(const CopulaModel& model, int count, std::uint64_t seed) {
  if (count < 1) throw DomainError("sample_copula: scenario count must be at least 1");
  const Eigen::Index T = model.cholesky.rows();
  Mat g(count, T);
  Vec xi(T);
  for (int w = 0; w < count; ++w) {
    Rng rng(derive_seed(seed, std::uint64_t(w)));
    std::normal_distribution<double> normal;
    for (Eigen::Index k = 0; k < T; ++k) xi(k) = normal(rng);
    g.row(w) = (model.cholesky.triangularView<Eigen::Lower>() * xi).transpose();
  }
  return g;
}

ScenarioSet sample_scenarios(const CopulaModel& model, const Vec& forecast, int count,
                             std::uint64_t seed, double pv_capacity) {
  if (count < 1) throw DomainError("sample_scenarios: scenario count must be at least 1");
  if (forecast.size() != model.periods())
    throw ShapeError("sample_scenarios: forecast length differs from model lead times");
  const Mat g = sample_copula(model, count, seed);
  ScenarioSet set;
  set.values.resize(count, forecast.size());
  for (int w = 0; w < count; ++w) {
    for (Eigen::Index k = 0; k < forecast.size(); ++k) {
      const auto& m = model.marginals[std::size_t(k)];
      const double z = m.degenerate ? 0.0 : m.quantile(std_normal_cdf(g(w, k)));
      set.values(w, k) = std::clamp(forecast(k) + z, 0.0, pv_capacity);
    }
  }
  set.weights = Vec::Constant(count, 1.0 / count);
  return set;
}

}  // namespace capfirm

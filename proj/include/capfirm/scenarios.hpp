#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "capfirm/domain.hpp"

namespace capfirm {

// ---------------------------------------------------------------------------
// Standard normal distribution

template <typename Scalar>
Scalar std_normal_cdf(Scalar x) {
  using std::erfc;
  using std::sqrt;
  return Scalar(0.5) * erfc(-x / sqrt(Scalar(2)));
}

/// Inverse of std_normal_cdf on (0, 1); throws DomainError outside.
double std_normal_quantile(double u);

// ---------------------------------------------------------------------------
// Random streams
//
// Every consumer draws from its own mt19937_64 seeded with
// derive_seed(seed, stream) = splitmix64(seed + (stream + 1) * 0x9E3779B97F4A7C15).
// Scenario omega of a sampling call uses stream omega, so any subset of scenarios
// can be regenerated independently.

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Gaussian copula

/// Empirical distribution of the forecast error at one lead time.
struct ErrorMarginal {
  int lead_time = 0;
  Vec sorted;  // ascending
  bool degenerate = false;

  /// Linear interpolation between order statistics placed at (k - 0.5) / n,
  /// flat beyond the first and last one.
  double quantile(double u) const;
};

struct CopulaModel {
  std::vector<ErrorMarginal> marginals;
  Mat correlation;  // repaired, unit diagonal
  Mat cholesky;     // lower triangular, cholesky * cholesky^T == correlation

  int periods() const { return static_cast<int>(marginals.size()); }
};

struct CopulaFitOptions {
  int min_days = 30;
  double degenerate_rel_std = 1e-9;  // relative to PV capacity
  double eigen_floor = 1e-8;
};

/// errors: one row per historical day, one column per lead time (kW).
CopulaModel fit_copula(const Mat& errors, double pv_capacity, const CopulaFitOptions& options = {});

/// Mid-rank normal scores of each column, (rank - 0.5) / n mapped through the quantile.
Mat normal_scores(const Mat& samples);

/// Clips to [-1, 1]-valued symmetric matrix with unit diagonal and floors its
/// spectrum so the smallest eigenvalue is at least `floor`.
Mat repair_correlation(const Mat& corr, double floor = 1e-8);

struct ScenarioSet {
  Mat values;    // |Omega| x T, kW
  Vec weights;   // sums to one

  int count() const { return static_cast<int>(values.rows()); }
  int periods() const { return static_cast<int>(values.cols()); }
  static ScenarioSet single(const Vec& profile);
};

/// Correlated standard normal draws g ~ N(0, R), one row per scenario.
Mat sample_copula(const CopulaModel& model, int count, std::uint64_t seed);

/// forecast + sampled error, clipped to [0, pv_capacity], equal weights.
ScenarioSet sample_scenarios(const CopulaModel& model, const Vec& forecast, int count,
                             std::uint64_t seed, double pv_capacity);

}  // namespace capfirm

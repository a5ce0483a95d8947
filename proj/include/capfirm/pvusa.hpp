#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "capfirm/domain.hpp"
#include "capfirm/timeutil.hpp"

namespace capfirm {

/// PVUSA coefficients: power = a*I + b*I^2 + c*I*T with I in W/m^2, T in degC, power in kW.
struct PvusaParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  Eigen::Vector3d vector() const { return {a, b, c}; }
  bool sign_valid() const { return a > 0.0 && b < 0.0 && c < 0.0; }
};

/// Steady-state estimate for the Liege plant.
inline constexpr PvusaParams kLiegeParams{0.573, -7.68e-5, -1.86e-3};

struct WeatherSeries {
  std::vector<Timestamp> time;
  Vec irradiance;   // W/m^2
  Vec temperature;  // degC

  Eigen::Index size() const { return irradiance.size(); }
  void validate() const;
};

template <typename Scalar>
Scalar pvusa_eval(const PvusaParams& p, Scalar irradiance, Scalar temperature) {
  if (irradiance < Scalar(0)) throw DomainError("pvusa_eval: negative irradiance");
  return Scalar(p.a) * irradiance + Scalar(p.b) * irradiance * irradiance +
         Scalar(p.c) * irradiance * temperature;
}

/// Same model clipped to [0, capacity].
double pvusa_eval(const PvusaParams& p, double irradiance, double temperature, double capacity);

Vec pvusa_eval(const PvusaParams& p, const Vec& irradiance, const Vec& temperature,
               std::optional<double> capacity = std::nullopt);

struct PvusaFitOptions {
  double window_hours = 12.0;
  double step_hours = 1.0;
  double irradiance_threshold = 5.0;  // W/m^2, samples at or below are night
  int min_samples = 3;
};

enum class PvusaWindowStatus { Fitted, Skipped, RankDeficient };

struct PvusaEstimate {
  Timestamp window_end;
  PvusaParams params;  // previous estimate when the window was not fitted
  PvusaWindowStatus status = PvusaWindowStatus::Skipped;
  int samples = 0;
  std::string diagnostic;
};

struct PvusaFit {
  std::vector<PvusaEstimate> trajectory;
  std::optional<PvusaParams> final;  // last fitted window
};

/// Least squares on one sample set subject to a > 0, b < 0, c < 0.
/// Returns nullopt when the design matrix has rank < 3.
std::optional<PvusaParams> fit_pvusa_samples(const Vec& power, const Vec& irradiance,
                                             const Vec& temperature);

/// Sliding-window estimation; one estimate per step, windows are (end - window, end].
PvusaFit fit_pvusa(const Vec& power, const WeatherSeries& weather,
                   const PvusaFitOptions& options = {});

/// Haurwitz clear-sky global horizontal irradiance in W/m^2.
double clear_sky_irradiance(double latitude_deg, Timestamp ts, double longitude_deg = 0.0);

/// Cosine of the solar zenith angle.
double solar_cos_zenith(double latitude_deg, Timestamp ts, double longitude_deg = 0.0);

}  // namespace capfirm

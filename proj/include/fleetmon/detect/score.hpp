// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file score.hpp
/// @brief Online window scoring against a trained UnitModel.
///
/// For each sensor i the window mean is compared to the trained mean:
///
///   z_i = (ybar_i - mu_i) / se_i,   se_i^2 = sigma_i^2 (1/w + 1/n_train)
///
/// where sigma_i^2 is the model variance of the sensor and the 1/n_train term
/// accounts for the error in the trained mean itself. p_i = 2 (1 - Phi(|z_i|)).
/// The centred window is also projected onto the retained components, one
/// (w x n)(n x r) product per window.

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fleetmon/detect/model.hpp"

namespace fleetmon::detect {

inline constexpr double kPValueFloor = 1e-300;
inline constexpr std::size_t kDefaultWindowLength = 60;

struct ScoreWindow {
  std::uint32_t unit_id{0};
  Eigen::MatrixXd values;  ///< w x n_sensors, columns in model sensor order
  std::int64_t window_end_ms{0};
};

struct PValueVector {
  std::uint32_t unit_id{0};
  std::int64_t window_end_ms{0};
  std::vector<double> p;
  std::vector<double> z;
  /// Window-mean scores on the retained components (length r).
  Eigen::VectorXd component_scores;
};

/// Two-sided normal tail 2 (1 - Phi(|z|)), floored at kPValueFloor.
double two_sided_p_value(double z) noexcept;

/// Precomputes per-sensor standard errors for repeated scoring.
class WindowScorer {
 public:
  explicit WindowScorer(const UnitModel& model);

  /// Throws AlignmentError when the window width differs from the model.
  PValueVector score(const ScoreWindow& window) const;

  /// Standard deviation of one sample of sensor i under the model.
  double sample_sd(std::size_t sensor_index) const { return sample_sd_(static_cast<Eigen::Index>(sensor_index)); }

 private:
  const UnitModel* model_;
  Eigen::VectorXd sample_sd_;
};

PValueVector score_window(const UnitModel& model, const ScoreWindow& window);

}  // namespace fleetmon::detect

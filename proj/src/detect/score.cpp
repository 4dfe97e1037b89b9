// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/detect/score.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fleetmon/error.hpp"

namespace fleetmon::detect {

double two_sided_p_value(double z) noexcept {
  const double p = std::erfc(std::abs(z) / std::numbers::sqrt2);
  if (!(p >= kPValueFloor)) return kPValueFloor;  // also catches NaN
  return std::min(p, 1.0);
}

WindowScorer::WindowScorer(const UnitModel& model)
    : model_(&model), sample_sd_(model.sensor_variance().cwiseSqrt()) {}

PValueVector WindowScorer::score(const ScoreWindow& window) const {
  const UnitModel& m = *model_;
  const auto n = static_cast<Eigen::Index>(m.n_sensors());
  if (window.values.cols() != n)
    throw AlignmentError("window has " + std::to_string(window.values.cols()) +
                         " sensors, model for unit " + std::to_string(m.unit_id) + " has " +
                         std::to_string(n));
  if (window.values.rows() < 1) throw AlignmentError("window has no timesteps");
  const auto w = static_cast<double>(window.values.rows());

  const Eigen::MatrixXd centered = window.values.rowwise() - m.mean.transpose();
  const Eigen::MatrixXd projected = centered * m.eigenvectors;

  PValueVector out;
  out.unit_id = window.unit_id;
  out.window_end_ms = window.window_end_ms;
  out.component_scores = projected.colwise().mean().transpose();
  out.p.resize(static_cast<std::size_t>(n));
  out.z.resize(static_cast<std::size_t>(n));
  const double train_term =
      m.training_sample_count > 0 ? 1.0 / static_cast<double>(m.training_sample_count) : 0.0;
  const double se_scale = std::sqrt(1.0 / w + train_term);
  const Eigen::VectorXd deviation = centered.colwise().mean().transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double se = sample_sd_(i) * se_scale;
    const double z = deviation(i) / se;
    out.z[static_cast<std::size_t>(i)] = z;
    out.p[static_cast<std::size_t>(i)] = two_sided_p_value(z);
  }
  return out;
}

PValueVector score_window(const UnitModel& model, const ScoreWindow& window) {
  return WindowScorer(model).score(window);
}

}  // namespace fleetmon::detect

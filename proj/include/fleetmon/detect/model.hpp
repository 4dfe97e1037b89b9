// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file model.hpp
/// @brief Offline per-unit model: column means plus a spectral decomposition
/// of the sample covariance.
///
/// Retained components carry the shared variance structure; whatever each
/// sensor's variance the retained components miss is kept as a per-sensor
/// residual, floored so scoring never divides by zero.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace fleetmon::detect {

/// Rows are timesteps, columns are sensors (in `sensor_ids` order).
struct TrainingWindow {
  std::uint32_t unit_id{0};
  Eigen::MatrixXd values;
  std::vector<std::int64_t> timestamps;
  std::vector<std::uint32_t> sensor_ids;
};

inline constexpr double kDefaultVarianceShare = 0.95;
inline constexpr double kVarianceFloorFactor = 1e-6;

struct RankRule {
  /// Fixed rank (clamped to [1, n_sensors]); nullopt selects automatically.
  std::optional<std::size_t> fixed_rank;
  /// Automatic rule: smallest r whose leading eigenvalues reach this share.
  double variance_share{kDefaultVarianceShare};
};

struct UnitModel {
  std::uint32_t unit_id{0};
  std::vector<std::uint32_t> sensor_ids;
  Eigen::VectorXd mean;
  Eigen::MatrixXd eigenvectors;  ///< n_sensors x r, orthonormal columns
  Eigen::VectorXd eigenvalues;   ///< length r, descending, >= 0
  Eigen::VectorXd residual_variance;
  std::int64_t trained_at{0};  ///< last training timestamp (ms)
  std::uint64_t training_sample_count{0};  ///< training rows

  std::size_t n_sensors() const noexcept { return static_cast<std::size_t>(mean.size()); }
  std::size_t rank() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }

  /// Per-sensor variance implied by the model: diag(V L V^T) + residual.
  Eigen::VectorXd sensor_variance() const;

  /// V L V^T, plus diag(residual) when requested.
  Eigen::MatrixXd covariance(bool include_residual) const;

  /// Exact (bitwise) equality of every field.
  bool operator==(const UnitModel& other) const;
};

/// Unbiased sample covariance of the columns of `x` (requires >= 2 rows).
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x);

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   ///< descending, negatives clipped to 0
  Eigen::MatrixXd eigenvectors;  ///< columns; largest-|entry| made positive
};

/// Symmetric eigendecomposition with a deterministic sign convention.
SpectralDecomposition decompose(const Eigen::MatrixXd& covariance);

std::size_t select_rank(const Eigen::VectorXd& eigenvalues, const RankRule& rule);

/// Throws InsufficientDataError with fewer than two rows, ValidationError on
/// non-finite input or mismatched sensor ids.
UnitModel estimate_model(const TrainingWindow& window, const RankRule& rule = {});

/// ||C - model||_F / ||C||_F (absolute error when ||C||_F == 0).
double reconstruction_error(const UnitModel& model, const Eigen::MatrixXd& covariance,
                            bool include_residual);

/// max |V^T V - I|.
double orthonormality_error(const Eigen::MatrixXd& eigenvectors);

}  // namespace fleetmon::detect

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/detect/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Eigenvalues>

#include "fleetmon/error.hpp"

namespace fleetmon::detect {

namespace {

bool same_bits(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
}

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
}

}  // namespace

Eigen::VectorXd UnitModel::sensor_variance() const {
  Eigen::VectorXd var = residual_variance;
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j)
    var += eigenvalues(j) * eigenvectors.col(j).cwiseAbs2();
  return var;
}

Eigen::MatrixXd UnitModel::covariance(bool include_residual) const {
  Eigen::MatrixXd c = eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  if (include_residual) c.diagonal() += residual_variance;
  return c;
}

bool UnitModel::operator==(const UnitModel& other) const {
  return unit_id == other.unit_id && sensor_ids == other.sensor_ids &&
         trained_at == other.trained_at &&
         training_sample_count == other.training_sample_count &&
         same_bits(mean, other.mean) && same_bits(eigenvectors, other.eigenvectors) &&
         same_bits(eigenvalues, other.eigenvalues) &&
         same_bits(residual_variance, other.residual_variance);
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
  if (x.rows() < 2)
    throw InsufficientDataError("covariance needs at least 2 rows, got " +
                                std::to_string(x.rows()));
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const auto n = static_cast<Eigen::Index>(x.cols());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  c.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(),
                                               1.0 / static_cast<double>(x.rows() - 1));
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  return c;
}

SpectralDecomposition decompose(const Eigen::MatrixXd& covariance) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success)
    throw ValidationError("eigendecomposition did not converge");
  const Eigen::Index n = covariance.rows();
  SpectralDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  // Eigen returns ascending order.
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = n - 1 - j;
    out.eigenvalues(j) = std::max(0.0, solver.eigenvalues()(src));
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (std::abs(v(i)) > std::abs(v(pivot))) pivot = i;
    }
    if (v(pivot) < 0) v = -v;
    out.eigenvectors.col(j) = v;
  }
  return out;
}

std::size_t select_rank(const Eigen::VectorXd& eigenvalues, const RankRule& rule) {
  const auto n = static_cast<std::size_t>(eigenvalues.size());
  if (n == 0) return 0;
  if (rule.fixed_rank) return std::clamp<std::size_t>(*rule.fixed_rank, 1, n);
  const double total = eigenvalues.sum();
  if (total <= 0.0) return 1;
  double running = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    running += eigenvalues(static_cast<Eigen::Index>(r));
    if (running >= rule.variance_share * total) return r + 1;
  }
  return n;
}

UnitModel estimate_model(const TrainingWindow& window, const RankRule& rule) {
  const Eigen::MatrixXd& x = window.values;
  if (x.rows() < 2)
    throw InsufficientDataError("unit " + std::to_string(window.unit_id) +
                                ": training window needs at least 2 timesteps");
  if (x.cols() < 1)
    throw InsufficientDataError("unit " + std::to_string(window.unit_id) + ": no sensors");
  if (!x.allFinite())
    throw ValidationError("unit " + std::to_string(window.unit_id) +
                          ": training window contains non-finite values");
  if (!window.sensor_ids.empty() &&
      window.sensor_ids.size() != static_cast<std::size_t>(x.cols()))
    throw ValidationError("sensor id list does not match training window width");
  if (!(rule.variance_share > 0.0 && rule.variance_share <= 1.0))
    throw ConfigError("variance share must be in (0, 1]");

  UnitModel model;
  model.unit_id = window.unit_id;
  model.sensor_ids = window.sensor_ids;
  if (model.sensor_ids.empty()) {
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      model.sensor_ids.push_back(static_cast<std::uint32_t>(i));
  }
  model.mean = x.colwise().mean().transpose();
  model.training_sample_count = static_cast<std::uint64_t>(x.rows());
  model.trained_at = window.timestamps.empty() ? 0 : window.timestamps.back();

  const Eigen::MatrixXd cov = sample_covariance(x);
  const SpectralDecomposition spectral = decompose(cov);
  const std::size_t r = select_rank(spectral.eigenvalues, rule);
  const auto ri = static_cast<Eigen::Index>(r);
  model.eigenvalues = spectral.eigenvalues.head(ri);
  model.eigenvectors = spectral.eigenvectors.leftCols(ri);

  const double top = spectral.eigenvalues.size() > 0 ? spectral.eigenvalues(0) : 0.0;
  const double floor = kVarianceFloorFactor * (top > 0.0 ? top : 1.0);
  Eigen::VectorXd captured = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index j = 0; j < ri; ++j)
    captured += model.eigenvalues(j) * model.eigenvectors.col(j).cwiseAbs2();
  model.residual_variance = (cov.diagonal() - captured).cwiseMax(floor);
  return model;
}

double reconstruction_error(const UnitModel& model, const Eigen::MatrixXd& covariance,
                            bool include_residual) {
  const double diff = (covariance - model.covariance(include_residual)).norm();
  const double scale = covariance.norm();
  return scale > 0.0 ? diff / scale : diff;
}

double orthonormality_error(const Eigen::MatrixXd& eigenvectors) {
  const Eigen::MatrixXd gram = eigenvectors.transpose() * eigenvectors;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

}  // namespace fleetmon::detect

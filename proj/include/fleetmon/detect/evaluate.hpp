// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file evaluate.hpp
/// @brief False-discovery and power accounting against simulator ground truth.
///
/// A (sensor, window) pair is truly anomalous when a fault covering the
/// sensor has started at or before the window end.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fleetmon/detect/multiple_testing.hpp"
#include "fleetmon/detect/score.hpp"
#include "fleetmon/sim/fleet.hpp"

namespace fleetmon::detect {

struct ScoredWindow {
  PValueVector scores;
  std::vector<std::uint32_t> sensor_ids;  ///< column order of scores.p
};

struct EvaluationMetrics {
  Method method{Method::kBH1995};
  double level{0.05};
  std::uint64_t windows{0};
  std::uint64_t false_rejections{0};  ///< V
  std::uint64_t rejections{0};        ///< R
  std::uint64_t true_rejections{0};
  std::uint64_t true_anomalies{0};    ///< anomalous (sensor, window) pairs
  /// Mean over windows of V_w / max(R_w, 1).
  double fdp{0.0};
  /// V / max(R, 1) over all windows pooled.
  double pooled_fdp{0.0};
  /// true_rejections / true_anomalies; nullopt when nothing was anomalous.
  std::optional<double> power;
};

EvaluationMetrics evaluate_detector(std::span<const ScoredWindow> windows,
                                    const sim::FleetGenerator& truth,
                                    const MultipleTestConfig& config);

/// Header `method,level,windows,V,R,FDP,power`; power prints as NA when
/// undefined.
void write_evaluation_csv(std::ostream& out, std::span<const EvaluationMetrics> rows);

}  // namespace fleetmon::detect

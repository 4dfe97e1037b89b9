// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file flags.hpp
/// @brief Anomaly flags persisted next to the sensor data.
///
/// A flag is stored as two points at the window end timestamp under the
/// series {method, sensor, unit}: metric `anomaly` holds the p-value, metric
/// `anomaly.rank` the 1-based position in the sorted p-vector. Rewriting the
/// same window overwrites the same points.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fleetmon/detect/multiple_testing.hpp"
#include "fleetmon/detect/score.hpp"
#include "fleetmon/tstore/store.hpp"

namespace fleetmon::detect {

inline constexpr std::string_view kAnomalyMetric = "anomaly";
inline constexpr std::string_view kAnomalyRankMetric = "anomaly.rank";

struct AnomalyFlag {
  std::uint32_t unit_id{0};
  std::uint32_t sensor_id{0};
  std::int64_t timestamp_ms{0};
  double p_value{0.0};
  Method method{Method::kBH1995};
  std::size_t rank{0};

  bool operator==(const AnomalyFlag&) const = default;
};

/// Builds flags for `rejections` (indices into p.p) using `sensor_ids` to map
/// column indices back to sensors.
std::vector<AnomalyFlag> make_flags(const PValueVector& p,
                                    std::span<const std::size_t> rejections,
                                    std::span<const std::uint32_t> sensor_ids, Method method);

/// Writes the flags to the store and returns them.
std::vector<AnomalyFlag> flag_anomalies(tstore::Store& store, const PValueVector& p,
                                        std::span<const std::size_t> rejections,
                                        std::span<const std::uint32_t> sensor_ids,
                                        Method method);

struct FlagQuery {
  std::optional<std::uint32_t> unit_id;
  std::optional<std::uint32_t> sensor_id;
  std::optional<Method> method;
  std::int64_t start_ms{0};
  std::int64_t end_ms{INT64_MAX};  ///< inclusive
};

/// Flags sorted by (timestamp, unit, sensor, method).
std::vector<AnomalyFlag> query_flags(const tstore::Store& store, const FlagQuery& query);

}  // namespace fleetmon::detect

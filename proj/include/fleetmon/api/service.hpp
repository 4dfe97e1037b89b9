// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file service.hpp
/// @brief Read-only analytics over the store: fleet health, sparklines,
/// drill-down windows and the flag feed.

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fleetmon/detect/flags.hpp"
#include "fleetmon/detect/model_cache.hpp"
#include "fleetmon/tstore/store.hpp"

namespace fleetmon::api {

inline constexpr int kSchemaVersion = 1;

enum class HealthStatus { kHealthy, kWarning, kCritical };

std::string_view to_string(HealthStatus status) noexcept;

struct ServiceConfig {
  /// Length of one scoring window in ms (60 samples at 1 Hz).
  std::int64_t window_ms{60'000};
  std::size_t trailing_windows{10};
  /// Distinct flagged sensors in the trailing period.
  std::size_t critical_sensors{5};
  std::size_t warning_sensors{1};
  double envelope_k{3.0};
  /// Restrict every view to flags of one method; nullopt uses all methods.
  std::optional<detect::Method> method;

  void validate() const;
};

/// Status rule shared by the service and its tests.
HealthStatus classify(std::size_t flagged_sensors, const ServiceConfig& config) noexcept;

struct UnitHealth {
  std::uint32_t unit_id{0};
  HealthStatus status{HealthStatus::kHealthy};
  std::size_t active_anomaly_count{0};  ///< flags in the trailing period
  std::size_t flagged_sensors{0};       ///< distinct sensors among them
  std::optional<std::int64_t> last_anomaly_timestamp;  ///< latest flag ever
};

struct FleetSummary {
  /// Trailing period (window_start_ms, window_end_ms]; end is the latest
  /// sensor timestamp in the store.
  std::optional<std::int64_t> window_start_ms;
  std::optional<std::int64_t> window_end_ms;
  std::vector<UnitHealth> units;  ///< Critical first, then Warning, then unit id
};

struct Marker {
  std::int64_t timestamp_ms{0};
  double p_value{0.0};
  detect::Method method{detect::Method::kBH1995};
  std::size_t rank{0};
};

struct SparklineSeries {
  std::uint32_t sensor_id{0};
  std::size_t raw_count{0};
  std::vector<tstore::SeriesPoint> points;
  std::vector<Marker> markers;
};

struct UnitSensors {
  std::uint32_t unit_id{0};
  std::int64_t from_ms{0};
  std::int64_t to_ms{0};
  std::size_t max_points{0};
  std::vector<SparklineSeries> sensors;  ///< ascending sensor id
};

struct Envelope {
  double mean{0.0};
  double sd{0.0};  ///< per-sample standard deviation under the model
  double k{3.0};
  double lower{0.0};
  double upper{0.0};
  std::int64_t trained_at{0};
};

struct Drilldown {
  std::uint32_t unit_id{0};
  std::uint32_t sensor_id{0};
  std::int64_t center_ms{0};
  std::int64_t half_width_ms{0};
  std::vector<tstore::SeriesPoint> points;
  std::vector<Marker> markers;
  std::optional<Envelope> envelope;  ///< nullopt when no model is cached
};

struct FlagFeed {
  std::int64_t since_ms{0};
  std::int64_t cursor_ms{0};  ///< pass back as `since` to get newer flags
  std::vector<detect::AnomalyFlag> flags;
};

/// Keeps at most `max_points` points: the index range is cut into
/// max_points / 2 equal chunks and each chunk contributes its minimum and
/// maximum (once if they coincide), in time order. Input shorter than the
/// budget is returned unchanged. Throws ValidationError when max_points < 2.
std::vector<tstore::SeriesPoint> downsample_min_max(const std::vector<tstore::SeriesPoint>& points,
                                                    std::size_t max_points);

class AnalyticsService {
 public:
  /// `cache` may be null; drill-downs then carry no envelope.
  AnalyticsService(const tstore::Store& store, const detect::ModelCache* cache,
                   ServiceConfig config = {});

  FleetSummary fleet_summary() const;
  /// Throws NotFoundError for an unknown unit.
  UnitSensors unit_sensors(std::uint32_t unit_id, std::int64_t from_ms, std::int64_t to_ms,
                           std::size_t max_points) const;
  /// Throws NotFoundError for an unknown unit or sensor.
  Drilldown drilldown(std::uint32_t unit_id, std::uint32_t sensor_id, std::int64_t center_ms,
                      std::int64_t half_width_ms) const;
  /// Flags strictly newer than `since_ms`, oldest first, at most `limit`.
  FlagFeed flags_since(std::int64_t since_ms, std::size_t limit = 10'000) const;

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  std::vector<std::uint32_t> sensors_of(std::uint32_t unit_id) const;
  std::vector<Marker> markers(std::uint32_t unit_id, std::uint32_t sensor_id,
                              std::int64_t from_ms, std::int64_t to_ms) const;

  const tstore::Store& store_;
  const detect::ModelCache* cache_;
  ServiceConfig config_;
};

}  // namespace fleetmon::api

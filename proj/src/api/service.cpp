// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/api/service.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "fleetmon/detect/pipeline.hpp"
#include "fleetmon/error.hpp"
#include "fleetmon/sim/records.hpp"

namespace fleetmon::api {

namespace {

int severity(HealthStatus s) {
  switch (s) {
    case HealthStatus::kCritical: return 2;
    case HealthStatus::kWarning: return 1;
    case HealthStatus::kHealthy: return 0;
  }
  return 0;
}

std::int64_t saturating_sub(std::int64_t a, std::int64_t b) {
  return a < std::numeric_limits<std::int64_t>::min() + b ? std::numeric_limits<std::int64_t>::min()
                                                          : a - b;
}

std::int64_t saturating_add(std::int64_t a, std::int64_t b) {
  return a > std::numeric_limits<std::int64_t>::max() - b ? std::numeric_limits<std::int64_t>::max()
                                                          : a + b;
}

}  // namespace

std::string_view to_string(HealthStatus status) noexcept {
  switch (status) {
    case HealthStatus::kHealthy: return "healthy";
    case HealthStatus::kWarning: return "warning";
    case HealthStatus::kCritical: return "critical";
  }
  return "healthy";
}

void ServiceConfig::validate() const {
  if (window_ms <= 0) throw ConfigError("window_ms must be positive");
  if (trailing_windows == 0) throw ConfigError("trailing_windows must be at least 1");
  if (warning_sensors == 0 || critical_sensors < warning_sensors)
    throw ConfigError("need 1 <= warning_sensors <= critical_sensors");
  if (!(envelope_k > 0.0)) throw ConfigError("envelope_k must be positive");
}

HealthStatus classify(std::size_t flagged_sensors, const ServiceConfig& config) noexcept {
  if (flagged_sensors >= config.critical_sensors) return HealthStatus::kCritical;
  if (flagged_sensors >= config.warning_sensors) return HealthStatus::kWarning;
  return HealthStatus::kHealthy;
}

std::vector<tstore::SeriesPoint> downsample_min_max(const std::vector<tstore::SeriesPoint>& points,
                                                    std::size_t max_points) {
  if (max_points < 2) throw ValidationError("max_points must be at least 2");
  if (points.size() <= max_points) return points;
  const std::size_t buckets = max_points / 2;
  const std::size_t n = points.size();
  std::vector<tstore::SeriesPoint> out;
  out.reserve(2 * buckets);
  for (std::size_t b = 0; b < buckets; ++b) {
    const std::size_t lo = b * n / buckets;
    const std::size_t hi = (b + 1) * n / buckets;
    std::size_t imin = lo;
    std::size_t imax = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      if (points[i].value < points[imin].value) imin = i;
      if (points[i].value > points[imax].value) imax = i;
    }
    out.push_back(points[std::min(imin, imax)]);
    if (imin != imax) out.push_back(points[std::max(imin, imax)]);
  }
  return out;
}

AnalyticsService::AnalyticsService(const tstore::Store& store, const detect::ModelCache* cache,
                                   ServiceConfig config)
    : store_(store), cache_(cache), config_(std::move(config)) {
  config_.validate();
}

FleetSummary AnalyticsService::fleet_summary() const {
  FleetSummary out;
  const auto units = detect::list_units(store_);
  const auto latest = store_.latest_timestamp(sim::kEnergyMetric);
  std::int64_t start = 0;
  if (latest) {
    out.window_end_ms = *latest;
    start = saturating_sub(
        *latest, config_.window_ms * static_cast<std::int64_t>(config_.trailing_windows));
    out.window_start_ms = start;
  }
  for (std::uint32_t unit : units) {
    UnitHealth h;
    h.unit_id = unit;
    detect::FlagQuery q;
    q.unit_id = unit;
    q.method = config_.method;
    const auto all = detect::query_flags(store_, q);
    if (!all.empty()) h.last_anomaly_timestamp = all.back().timestamp_ms;
    if (latest) {
      std::set<std::uint32_t> sensors;
      for (const auto& f : all) {
        if (f.timestamp_ms <= start || f.timestamp_ms > *latest) continue;
        ++h.active_anomaly_count;
        sensors.insert(f.sensor_id);
      }
      h.flagged_sensors = sensors.size();
    }
    h.status = classify(h.flagged_sensors, config_);
    out.units.push_back(h);
  }
  std::stable_sort(out.units.begin(), out.units.end(), [](const UnitHealth& a, const UnitHealth& b) {
    if (severity(a.status) != severity(b.status)) return severity(a.status) > severity(b.status);
    return a.unit_id < b.unit_id;
  });
  return out;
}

std::vector<std::uint32_t> AnalyticsService::sensors_of(std::uint32_t unit_id) const {
  std::vector<std::uint32_t> out;
  for (const auto& tags : store_.list_series(sim::kEnergyMetric))
    if (tstore::tag_as_uint(tags, "unit") == unit_id)
      out.push_back(tstore::tag_as_uint(tags, "sensor"));
  if (out.empty()) throw NotFoundError("unknown unit " + std::to_string(unit_id));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Marker> AnalyticsService::markers(std::uint32_t unit_id, std::uint32_t sensor_id,
                                              std::int64_t from_ms, std::int64_t to_ms) const {
  detect::FlagQuery q{unit_id, sensor_id, config_.method, from_ms, to_ms};
  std::vector<Marker> out;
  for (const auto& f : detect::query_flags(store_, q))
    out.push_back({f.timestamp_ms, f.p_value, f.method, f.rank});
  return out;
}

UnitSensors AnalyticsService::unit_sensors(std::uint32_t unit_id, std::int64_t from_ms,
                                           std::int64_t to_ms, std::size_t max_points) const {
  if (max_points < 2) throw ValidationError("max_points must be at least 2");
  if (from_ms > to_ms) throw ValidationError("from must not exceed to");
  const auto sensors = sensors_of(unit_id);
  const auto series = store_.query({std::string(sim::kEnergyMetric),
                                    {{"unit", std::to_string(unit_id)}},
                                    from_ms,
                                    to_ms});
  UnitSensors out{unit_id, from_ms, to_ms, max_points, {}};
  for (std::uint32_t sensor : sensors) {
    SparklineSeries s;
    s.sensor_id = sensor;
    for (const auto& r : series) {
      if (tstore::tag_as_uint(r.tags, "sensor") != sensor) continue;
      s.raw_count = r.points.size();
      s.points = downsample_min_max(r.points, max_points);
    }
    s.markers = markers(unit_id, sensor, from_ms, to_ms);
    out.sensors.push_back(std::move(s));
  }
  return out;
}

Drilldown AnalyticsService::drilldown(std::uint32_t unit_id, std::uint32_t sensor_id,
                                      std::int64_t center_ms, std::int64_t half_width_ms) const {
  if (half_width_ms < 0) throw ValidationError("half_width must be non-negative");
  const auto sensors = sensors_of(unit_id);
  if (!std::binary_search(sensors.begin(), sensors.end(), sensor_id))
    throw NotFoundError("unit " + std::to_string(unit_id) + " has no sensor " +
                        std::to_string(sensor_id));
  Drilldown out;
  out.unit_id = unit_id;
  out.sensor_id = sensor_id;
  out.center_ms = center_ms;
  out.half_width_ms = half_width_ms;
  const std::int64_t from = saturating_sub(center_ms, half_width_ms);
  const std::int64_t to = saturating_add(center_ms, half_width_ms);
  const auto series = store_.query({std::string(sim::kEnergyMetric),
                                    {{"sensor", std::to_string(sensor_id)},
                                     {"unit", std::to_string(unit_id)}},
                                    from,
                                    to});
  if (!series.empty()) out.points = series.front().points;
  out.markers = markers(unit_id, sensor_id, from, to);

  if (cache_ != nullptr && cache_->contains(unit_id)) {
    const detect::UnitModel model = cache_->load(unit_id);
    const auto it = std::find(model.sensor_ids.begin(), model.sensor_ids.end(), sensor_id);
    if (it != model.sensor_ids.end()) {
      const auto i = static_cast<Eigen::Index>(it - model.sensor_ids.begin());
      Envelope e;
      e.mean = model.mean(i);
      e.sd = std::sqrt(model.sensor_variance()(i));
      e.k = config_.envelope_k;
      e.lower = e.mean - e.k * e.sd;
      e.upper = e.mean + e.k * e.sd;
      e.trained_at = model.trained_at;
      out.envelope = e;
    }
  }
  return out;
}

FlagFeed AnalyticsService::flags_since(std::int64_t since_ms, std::size_t limit) const {
  FlagFeed out;
  out.since_ms = since_ms;
  out.cursor_ms = since_ms;
  if (since_ms == std::numeric_limits<std::int64_t>::max()) return out;
  detect::FlagQuery q;
  q.method = config_.method;
  q.start_ms = since_ms + 1;
  auto flags = detect::query_flags(store_, q);
  // Never split one timestamp across pages, or the cursor would skip flags.
  if (flags.size() > limit && limit > 0) {
    std::size_t cut = limit;
    while (cut > 0 && flags[cut - 1].timestamp_ms == flags[cut].timestamp_ms) --cut;
    if (cut == 0) {
      cut = limit;
      while (cut < flags.size() && flags[cut].timestamp_ms == flags[limit - 1].timestamp_ms) ++cut;
    }
    flags.resize(cut);
  }
  if (!flags.empty()) out.cursor_ms = flags.back().timestamp_ms;
  out.flags = std::move(flags);
  return out;
}

}  // namespace fleetmon::api

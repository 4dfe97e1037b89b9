// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/detect/flags.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "fleetmon/error.hpp"

namespace fleetmon::detect {

namespace {

tstore::Tags flag_tags(const AnomalyFlag& f) {
  return {{"method", std::string(to_string(f.method))},
          {"sensor", std::to_string(f.sensor_id)},
          {"unit", std::to_string(f.unit_id)}};
}

std::string tag_value(const tstore::Tags& tags, std::string_view name) {
  for (const auto& [k, v] : tags)
    if (k == name) return v;
  return {};
}

}  // namespace

std::vector<AnomalyFlag> make_flags(const PValueVector& p,
                                    std::span<const std::size_t> rejections,
                                    std::span<const std::uint32_t> sensor_ids, Method method) {
  if (sensor_ids.size() != p.p.size())
    throw AlignmentError("sensor id list does not match the p-vector length");
  const std::vector<std::size_t> ranks = sorted_ranks(p.p);
  std::vector<AnomalyFlag> out;
  out.reserve(rejections.size());
  for (std::size_t i : rejections) {
    if (i >= p.p.size()) throw ValidationError("rejection index out of range");
    out.push_back({p.unit_id, sensor_ids[i], p.window_end_ms, p.p[i], method, ranks[i]});
  }
  return out;
}

std::vector<AnomalyFlag> flag_anomalies(tstore::Store& store, const PValueVector& p,
                                        std::span<const std::size_t> rejections,
                                        std::span<const std::uint32_t> sensor_ids,
                                        Method method) {
  std::vector<AnomalyFlag> flags = make_flags(p, rejections, sensor_ids, method);
  for (const AnomalyFlag& f : flags) {
    const tstore::Tags tags = flag_tags(f);
    store.put(kAnomalyMetric, tags, f.timestamp_ms, f.p_value);
    store.put(kAnomalyRankMetric, tags, f.timestamp_ms, static_cast<double>(f.rank));
  }
  return flags;
}

std::vector<AnomalyFlag> query_flags(const tstore::Store& store, const FlagQuery& query) {
  std::vector<tstore::TagFilter> filters;
  if (query.method) filters.push_back({"method", std::string(to_string(*query.method))});
  if (query.sensor_id) filters.push_back({"sensor", std::to_string(*query.sensor_id)});
  if (query.unit_id) filters.push_back({"unit", std::to_string(*query.unit_id)});

  tstore::QueryRange range{std::string(kAnomalyMetric), filters, query.start_ms, query.end_ms};
  const auto p_series = store.query(range);
  range.metric = std::string(kAnomalyRankMetric);
  const auto rank_series = store.query(range);

  std::map<std::pair<tstore::Tags, std::int64_t>, double> ranks;
  for (const auto& s : rank_series)
    for (const auto& pt : s.points) ranks[{s.tags, pt.timestamp_ms}] = pt.value;

  std::vector<AnomalyFlag> out;
  for (const auto& s : p_series) {
    const Method method = parse_method(tag_value(s.tags, "method"));
    const std::uint32_t unit = tstore::tag_as_uint(s.tags, "unit");
    const std::uint32_t sensor = tstore::tag_as_uint(s.tags, "sensor");
    for (const auto& pt : s.points) {
      const auto it = ranks.find({s.tags, pt.timestamp_ms});
      const std::size_t rank =
          it == ranks.end() ? 0 : static_cast<std::size_t>(std::llround(it->second));
      out.push_back({unit, sensor, pt.timestamp_ms, pt.value, method, rank});
    }
  }
  std::sort(out.begin(), out.end(), [](const AnomalyFlag& a, const AnomalyFlag& b) {
    return std::tuple(a.timestamp_ms, a.unit_id, a.sensor_id, a.method) <
           std::tuple(b.timestamp_ms, b.unit_id, b.sensor_id, b.method);
  });
  return out;
}

}  // namespace fleetmon::detect

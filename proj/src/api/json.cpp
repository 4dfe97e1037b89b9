// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/api/json.hpp"

#include <charconv>
#include <cmath>

#include "fleetmon/error.hpp"
#include "fleetmon/sim/records.hpp"

namespace fleetmon::api {

using nlohmann::json;

namespace {

json points_json(const std::vector<tstore::SeriesPoint>& points) {
  json out = json::array();
  for (const auto& p : points) out.push_back({{"t", p.timestamp_ms}, {"v", p.value}});
  return out;
}

json markers_json(const std::vector<Marker>& markers) {
  json out = json::array();
  for (const auto& m : markers)
    out.push_back({{"t", m.timestamp_ms},
                   {"p_value", m.p_value},
                   {"method", detect::to_string(m.method)},
                   {"rank", m.rank}});
  return out;
}

json optional_ts(const std::optional<std::int64_t>& t) { return t ? json(*t) : json(nullptr); }

std::optional<std::uint32_t> parse_uint_tag(const json& tags, const char* name) {
  if (!tags.contains(name)) return std::nullopt;
  const json& v = tags.at(name);
  std::string text;
  if (v.is_string())
    text = v.get<std::string>();
  else if (v.is_number_unsigned())
    return v.get<std::uint64_t>() <= UINT32_MAX ? std::optional(v.get<std::uint32_t>())
                                                : std::nullopt;
  else
    return std::nullopt;
  std::uint32_t out = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return out;
}

}  // namespace

json to_json(const FleetSummary& s) {
  json units = json::array();
  for (const auto& u : s.units)
    units.push_back({{"unit_id", u.unit_id},
                     {"status", to_string(u.status)},
                     {"active_anomaly_count", u.active_anomaly_count},
                     {"flagged_sensors", u.flagged_sensors},
                     {"last_anomaly_timestamp", optional_ts(u.last_anomaly_timestamp)}});
  return {{"schema_version", kSchemaVersion},
          {"window_start", optional_ts(s.window_start_ms)},
          {"window_end", optional_ts(s.window_end_ms)},
          {"units", std::move(units)}};
}

json to_json(const UnitSensors& u) {
  json sensors = json::array();
  for (const auto& s : u.sensors)
    sensors.push_back({{"sensor_id", s.sensor_id},
                       {"raw_count", s.raw_count},
                       {"points", points_json(s.points)},
                       {"markers", markers_json(s.markers)}});
  return {{"schema_version", kSchemaVersion},
          {"unit_id", u.unit_id},
          {"from", u.from_ms},
          {"to", u.to_ms},
          {"max_points", u.max_points},
          {"sensors", std::move(sensors)}};
}

json to_json(const Drilldown& d) {
  json envelope = nullptr;
  if (d.envelope)
    envelope = {{"mean", d.envelope->mean}, {"sd", d.envelope->sd},
                {"k", d.envelope->k},       {"lower", d.envelope->lower},
                {"upper", d.envelope->upper}, {"trained_at", d.envelope->trained_at}};
  return {{"schema_version", kSchemaVersion},
          {"unit_id", d.unit_id},
          {"sensor_id", d.sensor_id},
          {"center", d.center_ms},
          {"half_width", d.half_width_ms},
          {"points", points_json(d.points)},
          {"markers", markers_json(d.markers)},
          {"has_model", d.envelope.has_value()},
          {"envelope", std::move(envelope)}};
}

json to_json(const FlagFeed& f) {
  json flags = json::array();
  for (const auto& a : f.flags)
    flags.push_back({{"unit_id", a.unit_id},
                     {"sensor_id", a.sensor_id},
                     {"t", a.timestamp_ms},
                     {"p_value", a.p_value},
                     {"method", detect::to_string(a.method)},
                     {"rank", a.rank}});
  return {{"schema_version", kSchemaVersion},
          {"since", f.since_ms},
          {"cursor", f.cursor_ms},
          {"flags", std::move(flags)}};
}

json error_json(std::string_view code, std::string_view message) {
  return {{"schema_version", kSchemaVersion},
          {"error", {{"code", std::string(code)}, {"message", std::string(message)}}}};
}

PutParseResult parse_put_body(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON body: ") + e.what());
  }
  if (doc.is_object()) doc = json::array({std::move(doc)});
  if (!doc.is_array()) throw ValidationError("put body must be an object or an array");

  PutParseResult out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& dp = doc[i];
    auto fail = [&](std::string why) { out.errors.emplace_back(i, std::move(why)); };
    if (!dp.is_object()) {
      fail("datapoint is not an object");
      continue;
    }
    if (!dp.contains("metric") || !dp["metric"].is_string()) {
      fail("missing metric");
      continue;
    }
    if (dp["metric"].get<std::string>() != sim::kEnergyMetric) {
      fail("unsupported metric '" + dp["metric"].get<std::string>() + "'");
      continue;
    }
    if (!dp.contains("timestamp") || !dp["timestamp"].is_number_integer() ||
        dp["timestamp"].get<std::int64_t>() < 0) {
      fail("timestamp must be a non-negative integer");
      continue;
    }
    if (!dp.contains("value") || !dp["value"].is_number()) {
      fail("value must be a number");
      continue;
    }
    if (!dp.contains("tags") || !dp["tags"].is_object()) {
      fail("missing tags");
      continue;
    }
    const auto unit = parse_uint_tag(dp["tags"], "unit");
    const auto sensor = parse_uint_tag(dp["tags"], "sensor");
    if (!unit || !sensor) {
      fail("tags unit and sensor must be unsigned integers");
      continue;
    }
    std::int64_t ts = dp["timestamp"].get<std::int64_t>();
    if (ts < 10'000'000'000) ts *= 1000;
    out.samples.push_back({*unit, *sensor, ts, dp["value"].get<double>()});
    out.source_index.push_back(i);
  }
  return out;
}

}  // namespace fleetmon::api

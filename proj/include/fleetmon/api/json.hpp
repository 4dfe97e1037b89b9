// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file json.hpp
/// @brief JSON payloads of the HTTP API. Every top-level payload carries
/// `schema_version`.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fleetmon/api/service.hpp"
#include "fleetmon/sim/fleet.hpp"

namespace fleetmon::api {

nlohmann::json to_json(const FleetSummary& summary);
nlohmann::json to_json(const UnitSensors& sensors);
nlohmann::json to_json(const Drilldown& drilldown);
nlohmann::json to_json(const FlagFeed& feed);
nlohmann::json error_json(std::string_view code, std::string_view message);

struct PutParseResult {
  std::vector<sim::SensorSample> samples;
  /// Index into the request array and reason, for datapoints left out.
  std::vector<std::pair<std::size_t, std::string>> errors;
  /// Request index of each entry of `samples`.
  std::vector<std::size_t> source_index;
};

/// Parses an OpenTSDB-style put body: one datapoint object or an array of
/// {metric, timestamp, value, tags}. Timestamps below 1e10 are seconds,
/// otherwise milliseconds. Only metric `energy` with integer `unit` and
/// `sensor` tags is accepted. Throws ValidationError for malformed JSON.
PutParseResult parse_put_body(std::string_view body);

}  // namespace fleetmon::api

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/sim/records.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "fleetmon/error.hpp"

namespace fleetmon::sim {

namespace {

std::string_view next_token(std::string_view& rest) {
  while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t'))
    rest.remove_prefix(1);
  std::size_t end = 0;
  while (end < rest.size() && rest[end] != ' ' && rest[end] != '\t') ++end;
  std::string_view token = rest.substr(0, end);
  rest.remove_prefix(end);
  return token;
}

template <typename T>
T parse_number(std::string_view token, std::string_view field) {
  T value{};
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw ValidationError("malformed " + std::string(field) + " '" +
                          std::string(token) + "'");
  return value;
}

}  // namespace

std::string format_record(const SensorSample& sample) {
  char buf[128];
  char* p = buf;
  const auto append = [&](std::string_view s) {
    for (char c : s) *p++ = c;
  };
  append(kEnergyMetric);
  *p++ = ' ';
  p = std::to_chars(p, buf + sizeof(buf), sample.timestamp_ms).ptr;
  *p++ = ' ';
  p = std::to_chars(p, buf + sizeof(buf), sample.value).ptr;
  append(" unit=");
  p = std::to_chars(p, buf + sizeof(buf), sample.unit_id).ptr;
  append(" sensor=");
  p = std::to_chars(p, buf + sizeof(buf), sample.sensor_id).ptr;
  return std::string(buf, p);
}

void write_records(std::ostream& out, std::span<const SensorSample> samples) {
  for (const SensorSample& s : samples) out << format_record(s) << '\n';
}

SensorSample parse_record(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::string_view rest = line;
  if (next_token(rest) != kEnergyMetric)
    throw ValidationError("record must start with metric 'energy'");
  SensorSample sample;
  sample.timestamp_ms = parse_number<std::int64_t>(next_token(rest), "timestamp");
  sample.value = parse_number<double>(next_token(rest), "value");
  bool have_unit = false;
  bool have_sensor = false;
  for (std::string_view tag = next_token(rest); !tag.empty();
       tag = next_token(rest)) {
    const std::size_t eq = tag.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError("malformed tag '" + std::string(tag) + "'");
    const std::string_view name = tag.substr(0, eq);
    const std::string_view value = tag.substr(eq + 1);
    if (name == "unit") {
      sample.unit_id = parse_number<std::uint32_t>(value, "unit");
      have_unit = true;
    } else if (name == "sensor") {
      sample.sensor_id = parse_number<std::uint32_t>(value, "sensor");
      have_sensor = true;
    } else {
      throw ValidationError("unexpected tag '" + std::string(name) + "'");
    }
  }
  if (!have_unit || !have_sensor)
    throw ValidationError("record needs both unit and sensor tags");
  if (sample.timestamp_ms < 0) throw ValidationError("timestamp is negative");
  if (!std::isfinite(sample.value)) throw ValidationError("value is not finite");
  return sample;
}

}  // namespace fleetmon::sim

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "fleetmon/sim/fleet.hpp"

namespace fleetmon::sim {

inline constexpr std::string_view kEnergyMetric = "energy";

// Line format: `energy <timestamp_ms> <value> unit=<u> sensor=<s>`. Values
// use the shortest round-trip decimal form, so parse(format(x)) == x.
std::string format_record(const SensorSample& sample);
void write_records(std::ostream& out, std::span<const SensorSample> samples);

/// Throws ValidationError describing the malformed field.
SensorSample parse_record(std::string_view line);

}  // namespace fleetmon::sim

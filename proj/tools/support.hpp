// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the fleetmon subcommands: the JSON config reader, fleet
// description files, run manifests and atomic artifact writes.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fleetmon/sim/fleet.hpp"

namespace fleetmon::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Reads a JSON config of the form {"<subcommand>": {"<option>": value}}.
// Option names are long flag names without the dashes; arrays fill
// repeatable options. Flags given on the command line win. Errors carry the
// line number of the offending text.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;

 private:
  const CLI::App* app_;
};

// 1-based line of byte offset `pos` in `text`.
std::size_t line_of(std::string_view text, std::size_t pos);

// Parses "<shift|drift>:<unit>:<sensors>:<onset_s>[:<magnitude|rate>]" where
// sensors is a list like "0-4,7". The optional last field defaults to
// 3 sigma for shifts and 0.01 sigma/s for drifts.
sim::FaultProfile parse_fault_spec(std::string_view spec, double noise_sigma);

nlohmann::json fleet_to_json(const sim::FleetConfig& config);
sim::FleetConfig fleet_from_json(const nlohmann::json& doc);
sim::FleetConfig load_fleet_file(const std::filesystem::path& path);

// Writes to `<path>.tmp` then renames, so a failed run never leaves a
// half-written artifact in place of an older one.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Records one subcommand run in <out_dir>/manifest.json, keeping the
// entries of other subcommands. Artifact paths are relative to out_dir.
void update_manifest(const std::filesystem::path& out_dir, const std::string& command,
                     const std::string& config_file, nlohmann::json parameters,
                     const std::vector<std::filesystem::path>& artifacts);

}  // namespace fleetmon::cli

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fleetmon/detect/model_cache.hpp"
#include "fleetmon/error.hpp"
#include "fleetmon/tstore/shard_log.hpp"

namespace fleetmon::cli {

using nlohmann::json;

std::size_t line_of(std::string_view text, std::size_t pos) {
  pos = std::min(pos, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

namespace {

// Position of the quoted key `name` at or after `from`, or npos.
std::size_t find_key(std::string_view text, std::string_view name, std::size_t from) {
  const std::string quoted = "\"" + std::string(name) + "\"";
  return text.find(quoted, from);
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::uint32_t parse_u32(std::string_view text, std::string_view what) {
  std::uint32_t out = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(std::string(what) + " '" + std::string(text) + "' is not an unsigned integer");
  return out;
}

double parse_double(std::string_view text, std::string_view what) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(std::string(what) + " '" + std::string(text) + "' is not a number");
  return out;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t end = text.find(sep, start);
    out.push_back(text.substr(start, end - start));
    if (end == std::string_view::npos) return out;
    start = end + 1;
  }
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool,
                                  std::string) const {
  json doc = json::object();
  for (const CLI::App* sub : app->get_subcommands([](const CLI::App*) { return true; })) {
    json section = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& results = opt->results();
        section[name] = results.size() == 1 ? json(results.front()) : json(results);
      } else if (default_also && !opt->get_default_str().empty()) {
        section[name] = opt->get_default_str();
      }
    }
    if (!section.empty()) doc[sub->get_name()] = std::move(section);
  }
  return doc.dump(2) + "\n";
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  const std::string text(std::istreambuf_iterator<char>(input), {});
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CLI::ConfigError("line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                           ": " + e.what());
  }
  if (!doc.is_object()) throw CLI::ConfigError("line 1: config must be a JSON object");

  std::vector<CLI::ConfigItem> items;
  for (const auto& [section, body] : doc.items()) {
    const std::size_t section_pos = find_key(text, section, 0);
    const std::size_t section_line = line_of(text, section_pos);
    const CLI::App* sub = nullptr;
    try {
      sub = app_->get_subcommand(section);
    } catch (const CLI::OptionNotFound&) {
    }
    if (sub == nullptr)
      throw CLI::ConfigError("line " + std::to_string(section_line) + ": unknown section '" +
                             section + "'");
    if (!body.is_object())
      throw CLI::ConfigError("line " + std::to_string(section_line) + ": section '" + section +
                             "' must be an object");
    for (const auto& [key, value] : body.items()) {
      const std::size_t line = line_of(text, find_key(text, key, section_pos));
      const CLI::Option* opt = sub->get_option_no_throw("--" + key);
      if (opt == nullptr || key == "help")
        throw CLI::ConfigError("line " + std::to_string(line) + ": '" + section +
                               "' has no option '" + key + "'");
      CLI::ConfigItem item;
      item.parents = {section};
      item.name = key;
      if (value.is_array()) {
        for (const json& v : value) {
          if (v.is_object() || v.is_array())
            throw CLI::ConfigError("line " + std::to_string(line) + ": '" + section + "." + key +
                                   "' entries must be scalars");
          item.inputs.push_back(scalar_text(v));
        }
      } else if (value.is_object() || value.is_null()) {
        throw CLI::ConfigError("line " + std::to_string(line) + ": '" + section + "." + key +
                               "' must be a scalar or an array");
      } else {
        item.inputs.push_back(scalar_text(value));
      }
      items.push_back(std::move(item));
    }
  }
  return items;
}

sim::FaultProfile parse_fault_spec(std::string_view spec, double noise_sigma) {
  const auto fields = split(spec, ':');
  if (fields.size() < 4 || fields.size() > 5)
    throw ConfigError("fault '" + std::string(spec) +
                      "' must look like kind:unit:sensors:onset_s[:magnitude]");
  const sim::FaultKind kind = sim::parse_fault_kind(fields[0]);
  const std::uint32_t unit = parse_u32(fields[1], "fault unit");
  std::vector<std::uint32_t> sensors;
  for (std::string_view part : split(fields[2], ',')) {
    const auto dash = part.find('-');
    if (dash == std::string_view::npos) {
      sensors.push_back(parse_u32(part, "fault sensor"));
      continue;
    }
    const std::uint32_t lo = parse_u32(part.substr(0, dash), "fault sensor");
    const std::uint32_t hi = parse_u32(part.substr(dash + 1), "fault sensor");
    if (hi < lo) throw ConfigError("fault sensor range '" + std::string(part) + "' is reversed");
    for (std::uint32_t s = lo; s <= hi; ++s) sensors.push_back(s);
  }
  const double onset = parse_double(fields[3], "fault onset");
  switch (kind) {
    case sim::FaultKind::kSharpShift: {
      const double magnitude = fields.size() == 5 ? parse_double(fields[4], "fault magnitude")
                                                  : sim::kDefaultShiftSigmas * noise_sigma;
      return sim::FaultProfile::sharp_shift(unit, std::move(sensors), onset, magnitude);
    }
    case sim::FaultKind::kGradualDegradation: {
      const double rate = fields.size() == 5 ? parse_double(fields[4], "fault drift rate")
                                             : sim::kDefaultDriftSigmasPerSecond * noise_sigma;
      return sim::FaultProfile::gradual_degradation(unit, std::move(sensors), onset, rate);
    }
    case sim::FaultKind::kNoiseOnly: break;
  }
  return sim::FaultProfile::noise_only(unit);
}

json fleet_to_json(const sim::FleetConfig& c) {
  json faults = json::array();
  for (const auto& f : c.fault_specs)
    faults.push_back({{"kind", sim::to_string(f.kind)},
                      {"unit", f.unit_id},
                      {"sensors", f.sensor_set},
                      {"onset_s", f.onset_time_s},
                      {"drift_rate", f.drift_rate},
                      {"shift_magnitude", f.shift_magnitude}});
  return {{"schema_version", 1},
          {"n_units", c.n_units},
          {"n_sensors_per_unit", c.n_sensors_per_unit},
          {"sample_rate_hz", c.sample_rate_hz},
          {"duration_s", c.duration_s},
          {"seed", c.seed},
          {"noise_sigma", c.noise_sigma},
          {"faults", std::move(faults)}};
}

sim::FleetConfig fleet_from_json(const json& doc) {
  try {
    sim::FleetConfig c;
    c.n_units = doc.at("n_units").get<std::uint32_t>();
    c.n_sensors_per_unit = doc.at("n_sensors_per_unit").get<std::uint32_t>();
    c.sample_rate_hz = doc.at("sample_rate_hz").get<double>();
    c.duration_s = doc.at("duration_s").get<double>();
    c.seed = doc.at("seed").get<std::uint64_t>();
    c.noise_sigma = doc.at("noise_sigma").get<double>();
    for (const json& f : doc.at("faults")) {
      sim::FaultProfile p;
      p.kind = sim::parse_fault_kind(f.at("kind").get<std::string>());
      p.unit_id = f.at("unit").get<std::uint32_t>();
      p.sensor_set = f.at("sensors").get<std::vector<std::uint32_t>>();
      p.onset_time_s = f.at("onset_s").get<double>();
      p.drift_rate = f.at("drift_rate").get<double>();
      p.shift_magnitude = f.at("shift_magnitude").get<double>();
      c.fault_specs.push_back(std::move(p));
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("fleet description: ") + e.what());
  }
}

sim::FleetConfig load_fleet_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open fleet description " + path.string());
  const std::string text(std::istreambuf_iterator<char>(in), {});
  try {
    return fleet_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ":" + std::to_string(line_of(text, e.byte)) + ": " +
                          e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void update_manifest(const std::filesystem::path& out_dir, const std::string& command,
                     const std::string& config_file, json parameters,
                     const std::vector<std::filesystem::path>& artifacts) {
  const auto path = out_dir / "manifest.json";
  json doc = json::object();
  if (std::ifstream in(path); in) {
    try {
      doc = json::parse(in);
    } catch (const json::parse_error&) {
      doc = json::object();
    }
  }
  doc["schema_version"] = 1;
  doc["tool"] = "fleetmon";
  doc["out_dir"] = out_dir.generic_string();
  doc["component_versions"] = {{"fleetmon", kToolVersion},
                               {"store_log", tstore::kLogVersion},
                               {"model_format", detect::kModelFormatVersion},
                               {"api_schema", 1}};
  json files = json::array();
  for (const auto& a : artifacts) files.push_back(a.generic_string());
  doc["runs"][command] = {{"config_file", config_file.empty() ? json(nullptr) : json(config_file)},
                          {"parameters", std::move(parameters)},
                          {"artifacts", std::move(files)}};
  write_file_atomic(path, doc.dump(2) + "\n");
}

}  // namespace fleetmon::cli

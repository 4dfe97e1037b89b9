// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/sim/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>

#include "fleetmon/error.hpp"

namespace fleetmon::sim {

namespace {

constexpr double kMaxSampleRateHz = 1000.0;  // timestamps have ms resolution

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string fault_field(std::size_t index, std::string_view field) {
  return "fault_specs[" + std::to_string(index) + "]." + std::string(field);
}

}  // namespace

std::string_view to_string(FaultKind kind) noexcept {
  switch (kind) {
    case FaultKind::kNoiseOnly: return "noise";
    case FaultKind::kGradualDegradation: return "drift";
    case FaultKind::kSharpShift: return "shift";
  }
  return "noise";
}

FaultKind parse_fault_kind(std::string_view text) {
  if (text == "noise" || text == "NoiseOnly") return FaultKind::kNoiseOnly;
  if (text == "drift" || text == "GradualDegradation")
    return FaultKind::kGradualDegradation;
  if (text == "shift" || text == "SharpShift") return FaultKind::kSharpShift;
  throw ConfigError("unknown fault kind '" + std::string(text) +
                    "' (expected noise, drift or shift)");
}

FaultProfile FaultProfile::noise_only(std::uint32_t unit_id) {
  FaultProfile f;
  f.unit_id = unit_id;
  return f;
}

FaultProfile FaultProfile::sharp_shift(std::uint32_t unit_id,
                                       std::vector<std::uint32_t> sensors,
                                       double onset_time_s, double magnitude) {
  FaultProfile f;
  f.kind = FaultKind::kSharpShift;
  f.unit_id = unit_id;
  f.sensor_set = std::move(sensors);
  f.onset_time_s = onset_time_s;
  f.shift_magnitude = magnitude;
  return f;
}

FaultProfile FaultProfile::gradual_degradation(
    std::uint32_t unit_id, std::vector<std::uint32_t> sensors,
    double onset_time_s, double drift_rate) {
  FaultProfile f;
  f.kind = FaultKind::kGradualDegradation;
  f.unit_id = unit_id;
  f.sensor_set = std::move(sensors);
  f.onset_time_s = onset_time_s;
  f.drift_rate = drift_rate;
  return f;
}

double FaultProfile::signal(double t_s) const noexcept {
  if (t_s < onset_time_s) return 0.0;
  switch (kind) {
    case FaultKind::kNoiseOnly: return 0.0;
    case FaultKind::kGradualDegradation: return drift_rate * (t_s - onset_time_s);
    case FaultKind::kSharpShift: return shift_magnitude;
  }
  return 0.0;
}

void FleetConfig::validate() const {
  if (n_units < 1) throw ConfigError("n_units must be >= 1");
  if (n_sensors_per_unit < 1)
    throw ConfigError("n_sensors_per_unit must be >= 1");
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw ConfigError("sample_rate_hz must be > 0");
  if (sample_rate_hz > kMaxSampleRateHz)
    throw ConfigError("sample_rate_hz must be <= 1000 (millisecond timestamps)");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw ConfigError("duration must be > 0");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw ConfigError("noise_sigma must be finite and >= 0");

  for (std::size_t i = 0; i < fault_specs.size(); ++i) {
    const FaultProfile& f = fault_specs[i];
    if (f.unit_id >= n_units)
      throw ConfigError(fault_field(i, "unit_id") + " out of range");
    if (f.kind == FaultKind::kNoiseOnly) {
      if (!f.sensor_set.empty())
        throw ConfigError(fault_field(i, "sensor_set") +
                          " must be empty for NoiseOnly");
      if (f.onset_time_s != 0.0 || f.drift_rate != 0.0 ||
          f.shift_magnitude != 0.0)
        throw ConfigError(fault_field(i, "kind") +
                          " NoiseOnly takes no onset/drift/shift parameters");
      continue;
    }
    if (f.sensor_set.empty())
      throw ConfigError(fault_field(i, "sensor_set") + " must be nonempty");
    for (std::uint32_t s : f.sensor_set) {
      if (s >= n_sensors_per_unit)
        throw ConfigError(fault_field(i, "sensor_set") + " index " +
                          std::to_string(s) + " out of range");
    }
    if (!std::isfinite(f.onset_time_s) || f.onset_time_s < 0.0 ||
        f.onset_time_s >= duration_s)
      throw ConfigError(fault_field(i, "onset_time") + " must be in [0, duration)");
    if (!std::isfinite(f.drift_rate))
      throw ConfigError(fault_field(i, "drift_rate") + " must be finite");
    if (!std::isfinite(f.shift_magnitude))
      throw ConfigError(fault_field(i, "shift_magnitude") + " must be finite");
  }
}

std::int64_t FleetConfig::steps() const noexcept {
  return static_cast<std::int64_t>(std::floor(duration_s * sample_rate_hz + 1e-9));
}

std::int64_t FleetConfig::timestamp_ms(std::int64_t step) const noexcept {
  return std::llround(static_cast<double>(step) * 1000.0 / sample_rate_hz);
}

std::uint64_t FleetConfig::total_samples() const noexcept {
  return static_cast<std::uint64_t>(steps()) * n_units * n_sensors_per_unit;
}

double standard_normal(std::uint64_t seed, std::uint32_t unit,
                       std::uint32_t sensor, std::int64_t step) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ unit);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(sensor) << 20));
  h = splitmix64(h ^ static_cast<std::uint64_t>(step));
  const std::uint64_t h2 = splitmix64(h ^ 0xD1B54A32D192ED03ULL);
  // Box-Muller on two 53-bit uniforms; u1 in (0, 1) keeps log finite.
  const double u1 = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

FleetGenerator::FleetGenerator(FleetConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t n_series =
      static_cast<std::size_t>(config_.n_units) * config_.n_sensors_per_unit;
  std::vector<std::vector<std::uint32_t>> per_series;
  std::vector<std::uint32_t> counts(n_series, 0);
  for (const FaultProfile& f : config_.fault_specs) {
    for (std::uint32_t s : f.sensor_set)
      ++counts[static_cast<std::size_t>(f.unit_id) * config_.n_sensors_per_unit + s];
  }
  fault_offsets_.assign(n_series + 1, 0);
  for (std::size_t i = 0; i < n_series; ++i)
    fault_offsets_[i + 1] = fault_offsets_[i] + counts[i];
  fault_ids_.resize(fault_offsets_.back());
  std::vector<std::uint32_t> fill(fault_offsets_.begin(), fault_offsets_.end() - 1);
  for (std::uint32_t id = 0; id < config_.fault_specs.size(); ++id) {
    const FaultProfile& f = config_.fault_specs[id];
    for (std::uint32_t s : f.sensor_set) {
      const std::size_t series =
          static_cast<std::size_t>(f.unit_id) * config_.n_sensors_per_unit + s;
      fault_ids_[fill[series]++] = id;
    }
  }
}

std::span<const std::uint32_t> FleetGenerator::faults_for(
    std::uint32_t unit, std::uint32_t sensor) const noexcept {
  const std::size_t series =
      static_cast<std::size_t>(unit) * config_.n_sensors_per_unit + sensor;
  return {fault_ids_.data() + fault_offsets_[series],
          fault_ids_.data() + fault_offsets_[series + 1]};
}

double FleetGenerator::noise(std::uint32_t unit, std::uint32_t sensor,
                             std::int64_t step) const noexcept {
  return config_.noise_sigma * standard_normal(config_.seed, unit, sensor, step);
}

double FleetGenerator::fault_signal(std::uint32_t unit, std::uint32_t sensor,
                                    double t_s) const noexcept {
  double total = 0.0;
  for (std::uint32_t id : faults_for(unit, sensor))
    total += config_.fault_specs[id].signal(t_s);
  return total;
}

SensorSample FleetGenerator::sample(std::uint32_t unit, std::uint32_t sensor,
                                    std::int64_t step) const noexcept {
  const std::int64_t ts = config_.timestamp_ms(step);
  double value = noise(unit, sensor, step);
  const auto faults = faults_for(unit, sensor);
  if (!faults.empty()) value += fault_signal(unit, sensor, ts / 1000.0);
  return {unit, sensor, ts, value};
}

bool FleetGenerator::is_anomalous(std::uint32_t unit, std::uint32_t sensor,
                                  std::int64_t timestamp_ms) const noexcept {
  const std::int64_t onset = onset_ms(unit, sensor);
  return onset >= 0 && timestamp_ms >= onset;
}

std::int64_t FleetGenerator::onset_ms(std::uint32_t unit,
                                      std::uint32_t sensor) const noexcept {
  std::int64_t best = -1;
  for (std::uint32_t id : faults_for(unit, sensor)) {
    const FaultProfile& f = config_.fault_specs[id];
    if (f.kind == FaultKind::kNoiseOnly) continue;
    // Smallest integral ms t with t / 1000.0 >= onset_time_s.
    auto onset = static_cast<std::int64_t>(std::ceil(f.onset_time_s * 1000.0));
    while (onset > 0 && (onset - 1) / 1000.0 >= f.onset_time_s) --onset;
    while (onset / 1000.0 < f.onset_time_s) ++onset;
    if (best < 0 || onset < best) best = onset;
  }
  return best;
}

SensorSample FleetGenerator::at(std::uint64_t index) const noexcept {
  const std::uint64_t per_step =
      static_cast<std::uint64_t>(config_.n_units) * config_.n_sensors_per_unit;
  const auto step = static_cast<std::int64_t>(index / per_step);
  const std::uint64_t within = index % per_step;
  return sample(static_cast<std::uint32_t>(within / config_.n_sensors_per_unit),
                static_cast<std::uint32_t>(within % config_.n_sensors_per_unit),
                step);
}

FleetStream::FleetStream(const FleetGenerator& generator)
    : FleetStream(generator, 0, generator.config().n_units) {}

FleetStream::FleetStream(const FleetGenerator& generator,
                         std::uint32_t unit_begin, std::uint32_t unit_end,
                         bool endless)
    : generator_(&generator),
      unit_begin_(unit_begin),
      unit_end_(std::min(unit_end, generator.config().n_units)),
      endless_(endless),
      unit_(unit_begin) {
  if (unit_begin_ >= unit_end_)
    throw ConfigError("stream unit range is empty");
}

bool FleetStream::done() const noexcept {
  return !endless_ && step_ >= generator_->config().steps();
}

std::size_t FleetStream::next_batch(std::vector<SensorSample>& out,
                                    std::size_t max_samples) {
  const std::uint32_t n_sensors = generator_->config().n_sensors_per_unit;
  std::size_t produced = 0;
  while (produced < max_samples && !done()) {
    out.push_back(generator_->sample(unit_, sensor_, step_));
    ++produced;
    if (++sensor_ == n_sensors) {
      sensor_ = 0;
      if (++unit_ == unit_end_) {
        unit_ = unit_begin_;
        ++step_;
      }
    }
  }
  return produced;
}

std::vector<SensorSample> generate_fleet(const FleetConfig& config,
                                         unsigned n_threads) {
  const FleetGenerator generator(config);
  const std::uint64_t total = config.total_samples();
  std::vector<SensorSample> out(total);
  n_threads = std::max(1u, n_threads);
  if (n_threads == 1 || total < 4096) {
    for (std::uint64_t i = 0; i < total; ++i) out[i] = generator.at(i);
    return out;
  }
  std::vector<std::jthread> workers;
  const std::uint64_t chunk = (total + n_threads - 1) / n_threads;
  for (unsigned t = 0; t < n_threads; ++t) {
    const std::uint64_t begin = t * chunk;
    const std::uint64_t end = std::min(total, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      for (std::uint64_t i = begin; i < end; ++i) out[i] = generator.at(i);
    });
  }
  return out;
}

std::vector<GroundTruthLabel> ground_truth(const FleetConfig& config) {
  const FleetGenerator generator(config);
  std::vector<GroundTruthLabel> labels;
  labels.reserve(config.total_samples());
  for (std::int64_t step = 0; step < config.steps(); ++step) {
    const std::int64_t ts = config.timestamp_ms(step);
    for (std::uint32_t u = 0; u < config.n_units; ++u) {
      for (std::uint32_t s = 0; s < config.n_sensors_per_unit; ++s)
        labels.push_back({u, s, ts, generator.is_anomalous(u, s, ts)});
    }
  }
  return labels;
}

}  // namespace fleetmon::sim

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file fleet.hpp
/// @brief Synthetic fleet of power units with injected, labelled faults.
///
/// Every sample value is a pure function of (seed, unit, sensor, step), so a
/// stream can be produced in any order or split across threads and still be
/// bit-identical to a serial run.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace fleetmon::sim {

enum class FaultKind { kNoiseOnly, kGradualDegradation, kSharpShift };

std::string_view to_string(FaultKind kind) noexcept;
FaultKind parse_fault_kind(std::string_view text);

inline constexpr double kDefaultNoiseSigma = 1.0;
inline constexpr double kDefaultShiftSigmas = 3.0;
inline constexpr double kDefaultDriftSigmasPerSecond = 0.01;
inline constexpr double kDefaultSampleRateHz = 1.0;

/// Ground-truth description of one injected fault. Every sensor in
/// `sensor_set` receives the same additive fault signal.
struct FaultProfile {
  FaultKind kind{FaultKind::kNoiseOnly};
  std::uint32_t unit_id{0};
  std::vector<std::uint32_t> sensor_set;
  double onset_time_s{0.0};
  double drift_rate{0.0};       ///< value units per second, degradation only
  double shift_magnitude{0.0};  ///< value units, shift only

  static FaultProfile noise_only(std::uint32_t unit_id);
  static FaultProfile sharp_shift(std::uint32_t unit_id,
                                  std::vector<std::uint32_t> sensors,
                                  double onset_time_s, double magnitude);
  static FaultProfile gradual_degradation(std::uint32_t unit_id,
                                          std::vector<std::uint32_t> sensors,
                                          double onset_time_s,
                                          double drift_rate);

  /// Deterministic additive component at time `t_s` (zero before onset).
  double signal(double t_s) const noexcept;

  bool operator==(const FaultProfile&) const = default;
};

struct FleetConfig {
  std::uint32_t n_units{1};
  std::uint32_t n_sensors_per_unit{1};
  double sample_rate_hz{kDefaultSampleRateHz};
  double duration_s{60.0};
  std::uint64_t seed{0};
  double noise_sigma{kDefaultNoiseSigma};
  std::vector<FaultProfile> fault_specs;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  std::int64_t steps() const noexcept;
  std::int64_t timestamp_ms(std::int64_t step) const noexcept;
  std::uint64_t total_samples() const noexcept;

  bool operator==(const FleetConfig&) const = default;
};

struct SensorSample {
  std::uint32_t unit_id{0};
  std::uint32_t sensor_id{0};
  std::int64_t timestamp_ms{0};
  double value{0.0};

  bool operator==(const SensorSample&) const = default;
};

struct GroundTruthLabel {
  std::uint32_t unit_id{0};
  std::uint32_t sensor_id{0};
  std::int64_t timestamp_ms{0};
  bool is_anomalous{false};

  bool operator==(const GroundTruthLabel&) const = default;
};

/// Standard-normal deviate keyed by (seed, unit, sensor, step).
double standard_normal(std::uint64_t seed, std::uint32_t unit,
                       std::uint32_t sensor, std::int64_t step) noexcept;

class FleetGenerator {
 public:
  explicit FleetGenerator(FleetConfig config);

  const FleetConfig& config() const noexcept { return config_; }

  double noise(std::uint32_t unit, std::uint32_t sensor,
               std::int64_t step) const noexcept;
  double fault_signal(std::uint32_t unit, std::uint32_t sensor,
                      double t_s) const noexcept;
  SensorSample sample(std::uint32_t unit, std::uint32_t sensor,
                      std::int64_t step) const noexcept;

  /// True at/after the onset of any fault (other than NoiseOnly) covering
  /// the sensor.
  bool is_anomalous(std::uint32_t unit, std::uint32_t sensor,
                    std::int64_t timestamp_ms) const noexcept;

  /// Earliest fault onset covering the sensor, in ms; -1 when never faulted.
  std::int64_t onset_ms(std::uint32_t unit, std::uint32_t sensor) const noexcept;

  /// Sample at global stream position `index` (step-major, then unit, then
  /// sensor).
  SensorSample at(std::uint64_t index) const noexcept;

 private:
  std::span<const std::uint32_t> faults_for(std::uint32_t unit,
                                            std::uint32_t sensor) const noexcept;

  FleetConfig config_;
  // CSR index: fault ids touching series (unit * n_sensors + sensor).
  std::vector<std::uint32_t> fault_offsets_;
  std::vector<std::uint32_t> fault_ids_;
};

/// Pull-based stream over a contiguous range of units, in stream order.
class FleetStream {
 public:
  explicit FleetStream(const FleetGenerator& generator);
  FleetStream(const FleetGenerator& generator, std::uint32_t unit_begin,
              std::uint32_t unit_end, bool endless = false);

  /// Appends up to `max_samples` samples to `out`; returns how many were
  /// appended (0 at end of stream).
  std::size_t next_batch(std::vector<SensorSample>& out,
                         std::size_t max_samples);

  bool done() const noexcept;

 private:
  const FleetGenerator* generator_;
  std::uint32_t unit_begin_;
  std::uint32_t unit_end_;
  bool endless_;
  std::int64_t step_{0};
  std::uint32_t unit_{0};
  std::uint32_t sensor_{0};
};

/// Whole stream, generated with `n_threads` workers. Output is identical for
/// every thread count.
std::vector<SensorSample> generate_fleet(const FleetConfig& config,
                                         unsigned n_threads = 1);

std::vector<GroundTruthLabel> ground_truth(const FleetConfig& config);

}  // namespace fleetmon::sim

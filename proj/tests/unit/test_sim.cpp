// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "fleetmon/error.hpp"
#include "fleetmon/sim/fleet.hpp"
#include "fleetmon/sim/records.hpp"

namespace fleetmon::sim {
namespace {

FleetConfig base_config(std::uint32_t units, std::uint32_t sensors, double duration) {
  FleetConfig c;
  c.n_units = units;
  c.n_sensors_per_unit = sensors;
  c.duration_s = duration;
  c.seed = 1234;
  return c;
}

TEST(Simulator, NoiseMomentsWithinStandardErrorBounds) {
  const auto samples = generate_fleet(base_config(1, 1, 10'000));
  ASSERT_EQ(samples.size(), 10'000u);
  double sum = 0.0;
  for (const auto& s : samples) sum += s.value;
  const double mean = sum / 10'000.0;
  double ss = 0.0;
  for (const auto& s : samples) ss += (s.value - mean) * (s.value - mean);
  const double sd = std::sqrt(ss / 9'999.0);
  EXPECT_LE(std::abs(mean), 3.0 / std::sqrt(10'000.0));
  EXPECT_GE(sd, 0.95);
  EXPECT_LE(sd, 1.05);
}

TEST(Simulator, ZeroMagnitudeShiftIsNoFault) {
  auto plain = base_config(1, 2, 30);
  auto shifted = plain;
  shifted.fault_specs.push_back(FaultProfile::sharp_shift(0, {0, 1}, 5.0, 0.0));
  EXPECT_EQ(generate_fleet(plain), generate_fleet(shifted));
}

TEST(Simulator, HundredByThousandEmitsHundredThousandPerSecond) {
  auto c = base_config(100, 1000, 2);
  const FleetGenerator gen(c);
  FleetStream stream(gen);
  std::vector<SensorSample> batch;
  std::size_t n = stream.next_batch(batch, 1'000'000);
  ASSERT_EQ(n, 200'000u);
  std::size_t first_second = 0;
  for (const auto& s : batch)
    if (s.timestamp_ms < 1000) ++first_second;
  EXPECT_EQ(first_second, 100'000u);
  EXPECT_EQ(c.total_samples(), 200'000u);
}

TEST(Simulator, StreamOrderIsTimestampThenUnitThenSensor) {
  const auto samples = generate_fleet(base_config(3, 4, 5));
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const auto& a = samples[i - 1];
    const auto& b = samples[i];
    EXPECT_TRUE(std::tie(a.timestamp_ms, a.unit_id, a.sensor_id) <
                std::tie(b.timestamp_ms, b.unit_id, b.sensor_id));
  }
}

TEST(Simulator, IdenticalAcrossThreadCounts) {
  auto c = base_config(7, 13, 40);
  c.fault_specs.push_back(FaultProfile::gradual_degradation(3, {1, 2}, 10.0, 0.5));
  const auto serial = generate_fleet(c, 1);
  EXPECT_EQ(serial, generate_fleet(c, 3));
  EXPECT_EQ(serial, generate_fleet(c, 8));
  EXPECT_EQ(serial, generate_fleet(c, 1));
}

TEST(Simulator, SuperpositionRecoversFaultSignal) {
  auto plain = base_config(2, 5, 200);
  auto faulted = plain;
  faulted.fault_specs.push_back(FaultProfile::gradual_degradation(1, {0, 3}, 50.0, 0.02));
  faulted.fault_specs.push_back(FaultProfile::sharp_shift(1, {3, 4}, 120.0, 2.5));
  const auto a = generate_fleet(plain);
  const auto b = generate_fleet(faulted);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = static_cast<double>(a[i].timestamp_ms) / 1000.0;
    double expected = 0.0;
    if (a[i].unit_id == 1) {
      if ((a[i].sensor_id == 0 || a[i].sensor_id == 3) && t >= 50.0) expected += 0.02 * (t - 50.0);
      if ((a[i].sensor_id == 3 || a[i].sensor_id == 4) && t >= 120.0) expected += 2.5;
    }
    EXPECT_NEAR(b[i].value - a[i].value, expected, 1e-12) << i;
  }
}

TEST(Simulator, SensorsInOneFaultDifferOnlyByNoise) {
  auto c = base_config(1, 3, 100);
  c.fault_specs.push_back(FaultProfile::sharp_shift(0, {0, 2}, 30.0, 4.0));
  const FleetGenerator gen(c);
  for (std::int64_t step = 0; step < 100; ++step) {
    const double diff = gen.sample(0, 0, step).value - gen.sample(0, 2, step).value;
    EXPECT_NEAR(diff, gen.noise(0, 0, step) - gen.noise(0, 2, step), 1e-12);
  }
}

TEST(Simulator, NoiseScalesWithSigma) {
  auto a = base_config(1, 1, 10);
  auto b = a;
  b.noise_sigma = 2.5;
  const auto x = generate_fleet(a);
  const auto y = generate_fleet(b);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i].value, 2.5 * x[i].value, 1e-12);
}

TEST(Simulator, SampleRateSetsTimestampSpacing) {
  auto c = base_config(1, 1, 2);
  c.sample_rate_hz = 4;
  const auto s = generate_fleet(c);
  ASSERT_EQ(s.size(), 8u);
  EXPECT_EQ(s[1].timestamp_ms, 250);
  EXPECT_EQ(s[7].timestamp_ms, 1750);
}

TEST(Simulator, InvalidConfigNamesField) {
  auto c = base_config(0, 1, 1);
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("n_units"), std::string::npos) << e.what();
  }
  c = base_config(1, 1, 1);
  c.noise_sigma = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = base_config(1, 2, 1);
  c.fault_specs.push_back(FaultProfile::sharp_shift(0, {5}, 0.0, 1.0));
  EXPECT_THROW(c.validate(), ConfigError);
  c = base_config(1, 1, 1);
  c.fault_specs.push_back(FaultProfile::sharp_shift(3, {0}, 0.0, 1.0));
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(GroundTruth, NoFaultsMeansAllFalse) {
  auto labels = ground_truth(base_config(2, 3, 20));
  EXPECT_EQ(labels.size(), 120u);
  for (const auto& l : labels) EXPECT_FALSE(l.is_anomalous);
}

TEST(GroundTruth, ShiftLabelsOnlyCoveredSensorsAfterOnset) {
  auto c = base_config(1, 6, 200);
  c.fault_specs.push_back(FaultProfile::sharp_shift(0, {3, 4}, 100.0, 3.0));
  for (const auto& l : ground_truth(c)) {
    const bool covered = l.sensor_id == 3 || l.sensor_id == 4;
    EXPECT_EQ(l.is_anomalous, covered && l.timestamp_ms >= 100'000);
  }
}

TEST(GroundTruth, DriftLabelCountMatchesCountingOracle) {
  auto c = base_config(2, 8, 300);
  c.fault_specs.push_back(FaultProfile::gradual_degradation(1, {0, 5, 7}, 137.0, 0.01));
  const auto samples = generate_fleet(c);
  const FleetGenerator gen(c);
  // Counting oracle: walk the generated stream and count post-onset samples
  // of covered sensors.
  std::size_t expected = 0;
  for (const auto& s : samples)
    if (s.unit_id == 1 && (s.sensor_id == 0 || s.sensor_id == 5 || s.sensor_id == 7) &&
        s.timestamp_ms >= 137'000)
      ++expected;
  std::size_t labelled = 0;
  for (const auto& l : ground_truth(c)) labelled += l.is_anomalous;
  EXPECT_EQ(labelled, expected);
  EXPECT_EQ(labelled, 3u * (300 - 137));
  EXPECT_EQ(gen.onset_ms(1, 5), 137'000);
  EXPECT_EQ(gen.onset_ms(1, 1), -1);
}

TEST(Records, FormatParseRoundTrip) {
  const auto samples = generate_fleet(base_config(2, 3, 10));
  for (const auto& s : samples) EXPECT_EQ(parse_record(format_record(s)), s);
  EXPECT_EQ(format_record({4, 7, 1500, 0.25}), "energy 1500 0.25 unit=4 sensor=7");
}

TEST(Records, MalformedLinesAreValidationErrors) {
  EXPECT_THROW(parse_record("power 1 2 unit=0 sensor=0"), ValidationError);
  EXPECT_THROW(parse_record("energy x 2 unit=0 sensor=0"), ValidationError);
  EXPECT_THROW(parse_record("energy 1 nan unit=0 sensor=0"), ValidationError);
  EXPECT_THROW(parse_record("energy 1 2 unit=0"), ValidationError);
  EXPECT_THROW(parse_record("energy -5 2 unit=0 sensor=0"), ValidationError);
  EXPECT_NO_THROW(parse_record("energy 1 2 sensor=3 unit=0"));
}

}  // namespace
}  // namespace fleetmon::sim

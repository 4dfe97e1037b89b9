// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fleetmon/ingest/gateway.hpp"
#include "fleetmon/sim/fleet.hpp"
#include "fleetmon/tstore/store.hpp"

namespace fleetmon::ingest {

struct BenchmarkOptions {
  double run_seconds{20.0};    ///< wall-clock window per writer count
  double warmup_seconds{5.0};  ///< leading seconds excluded from the steady state
  std::size_t n_producers{1};
  /// When > 0, producers cycle over the first `replay_seconds` of simulated
  /// time, so later passes overwrite earlier points and the store stays
  /// bounded. 0 streams ever-newer timestamps.
  double replay_seconds{0.0};
  tstore::StoreOptions store;  ///< must be memory-only; a fresh store per run
};

struct BenchmarkRow {
  std::size_t n_writers{0};
  double steady_state_rate{0.0};  ///< samples/second after warmup
  std::vector<std::uint64_t> per_second;
  IngestReport report;
};

/// Mean of the per-second counts at index >= warmup_seconds.
double steady_state_rate(std::span<const std::uint64_t> per_second,
                         double warmup_seconds);

/// Population coefficient of variation (sd / mean); 0 for an empty series.
double coefficient_of_variation(std::span<const std::uint64_t> values);

/// Drives the simulator at full speed through a fresh store + gateway for
/// each writer count. The fleet stream wraps around indefinitely so the run
/// length is set by the wall clock alone.
std::vector<BenchmarkRow> run_benchmark(const sim::FleetConfig& fleet,
                                        const GatewayConfig& gateway,
                                        std::span<const std::size_t> n_writers_list,
                                        const BenchmarkOptions& options = {});

/// CSV columns: n_writers,second_index,samples
void write_benchmark_csv(std::ostream& out, std::span<const BenchmarkRow> rows);

}  // namespace fleetmon::ingest

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/ingest/benchmark.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include "fleetmon/error.hpp"

namespace fleetmon::ingest {

double steady_state_rate(std::span<const std::uint64_t> per_second,
                         double warmup_seconds) {
  const auto skip = static_cast<std::size_t>(std::max(0.0, std::ceil(warmup_seconds)));
  if (per_second.size() <= skip) return 0.0;
  const auto tail = per_second.subspan(skip);
  return static_cast<double>(std::accumulate(tail.begin(), tail.end(), std::uint64_t{0})) /
         static_cast<double>(tail.size());
}

double coefficient_of_variation(std::span<const std::uint64_t> values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (std::uint64_t v : values) mean += static_cast<double>(v);
  mean /= static_cast<double>(values.size());
  if (mean == 0.0) return 0.0;
  double ss = 0.0;
  for (std::uint64_t v : values) {
    const double d = static_cast<double>(v) - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(values.size())) / mean;
}

std::vector<BenchmarkRow> run_benchmark(const sim::FleetConfig& fleet,
                                        const GatewayConfig& gateway,
                                        std::span<const std::size_t> n_writers_list,
                                        const BenchmarkOptions& options) {
  if (!options.store.data_dir.empty())
    throw ConfigError("benchmark store must be memory-only");
  if (options.n_producers < 1) throw ConfigError("benchmark needs >= 1 producer");
  if (options.replay_seconds < 0.0) throw ConfigError("replay_seconds must be >= 0");
  sim::FleetConfig source = fleet;
  if (options.replay_seconds > 0.0) source.duration_s = options.replay_seconds;
  const bool replay = options.replay_seconds > 0.0;
  const sim::FleetGenerator generator(source);
  const auto n_producers = static_cast<std::uint32_t>(
      std::min<std::size_t>(options.n_producers, fleet.n_units));

  std::vector<BenchmarkRow> rows;
  for (std::size_t n_writers : n_writers_list) {
    GatewayConfig cfg = gateway;
    cfg.n_writers = n_writers;
    cfg.validate();
    tstore::Store store(options.store);
    Gateway gw(store, cfg);

    std::atomic<bool> running{true};
    std::vector<std::jthread> producers;
    gw.start_metering();
    for (std::uint32_t p = 0; p < n_producers; ++p) {
      const std::uint32_t begin = fleet.n_units * p / n_producers;
      const std::uint32_t end = fleet.n_units * (p + 1) / n_producers;
      producers.emplace_back([&, begin, end] {
        sim::FleetStream stream(generator, begin, end, /*endless=*/!replay);
        while (running.load(std::memory_order_relaxed)) {
          std::vector<sim::SensorSample> batch;
          batch.reserve(cfg.batch_size);
          stream.next_batch(batch, cfg.batch_size);
          if (stream.done()) stream = sim::FleetStream(generator, begin, end);
          while (running.load(std::memory_order_relaxed)) {
            const SubmitResult r = gw.submit(std::move(batch));
            if (r.accepted()) break;
            std::this_thread::sleep_for(r.retry_after);
          }
        }
      });
    }
    // A little slack so the last full-second tick lands before the meter stops.
    std::this_thread::sleep_for(std::chrono::duration<double>(options.run_seconds + 0.3));
    gw.stop_metering();
    running = false;
    producers.clear();
    gw.stop();

    BenchmarkRow row;
    row.n_writers = n_writers;
    row.report = gw.report();
    row.per_second = row.report.per_second;
    // The meter's closing partial interval is not a full second.
    const auto full = static_cast<std::size_t>(std::floor(options.run_seconds));
    if (row.per_second.size() > full) row.per_second.resize(full);
    row.steady_state_rate = steady_state_rate(row.per_second, options.warmup_seconds);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_benchmark_csv(std::ostream& out, std::span<const BenchmarkRow> rows) {
  out << "n_writers,second_index,samples\n";
  for (const BenchmarkRow& row : rows) {
    for (std::size_t i = 0; i < row.per_second.size(); ++i)
      out << row.n_writers << ',' << i << ',' << row.per_second[i] << '\n';
  }
}

}  // namespace fleetmon::ingest

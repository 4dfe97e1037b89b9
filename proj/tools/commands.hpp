// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fleetmon::cli {

struct CommonOptions {
  std::filesystem::path out_dir;
  std::filesystem::path store_dir;  // default <out_dir>/store
  std::filesystem::path cache_dir;  // default <out_dir>/models
  std::string config_file;
  unsigned threads{1};

  std::filesystem::path store() const { return store_dir.empty() ? out_dir / "store" : store_dir; }
  std::filesystem::path cache() const { return cache_dir.empty() ? out_dir / "models" : cache_dir; }
};

struct StoreLayoutOptions {
  std::uint32_t shards{4};
  unsigned salt_buckets{16};
};

struct GatewayOptions {
  std::size_t writers{4};
  std::size_t queue_capacity{64};
  std::size_t batch_size{1000};
  std::string policy{"reject"};
};

struct SimulateOptions {
  std::uint32_t units{2};
  std::uint32_t sensors{10};
  double duration_s{60};
  double rate_hz{1};
  std::uint64_t seed{0};
  double noise_sigma{1};
  std::vector<std::string> faults;
  bool to_stdout{false};
  bool ingest{false};
  StoreLayoutOptions layout;
  GatewayOptions gateway;
};

struct IngestOptions {
  std::filesystem::path input;  // default <out_dir>/records.txt
  StoreLayoutOptions layout;
  GatewayOptions gateway;
};

struct BenchOptions {
  std::vector<std::size_t> writers{1, 2, 4};
  double run_seconds{20};
  double warmup_seconds{5};
  double replay_seconds{0};
  std::size_t producers{1};
  std::uint32_t units{4};
  std::uint32_t sensors{100};
  std::uint64_t seed{0};
  double rate_hz{1};
  StoreLayoutOptions layout;
  GatewayOptions gateway;
};

struct TrainOptionsCli {
  std::vector<std::uint32_t> units;
  std::int64_t from_ms{0};
  std::int64_t to_ms{INT64_MAX};
  std::size_t rank{0};  // 0: automatic
  double variance_share{0.95};
};

struct ScoreOptionsCli {
  std::vector<std::uint32_t> units;
  std::string method{"bh"};
  double level{0.05};
  std::size_t window{60};
  std::int64_t from_ms{0};
  std::int64_t to_ms{INT64_MAX};
};

struct EvaluateOptions {
  std::filesystem::path fleet_file;  // default <out_dir>/fleet.json
  std::vector<std::string> methods{"bh", "by", "bonferroni", "uncorrected"};
  double level{0.05};
  std::size_t window{60};
  std::int64_t from_ms{0};
  std::int64_t to_ms{INT64_MAX};
};

struct ServeOptions {
  std::string host{"127.0.0.1"};
  int port{8080};
  std::filesystem::path static_dir;
  std::filesystem::path port_file;
  std::string method;  // empty: all methods
  std::int64_t window_ms{60'000};
  GatewayOptions gateway;
};

// Each returns the process exit code; errors propagate as exceptions.
int run_simulate(const CommonOptions& common, const SimulateOptions& options);
int run_ingest(const CommonOptions& common, const IngestOptions& options);
int run_bench(const CommonOptions& common, const BenchOptions& options);
int run_train(const CommonOptions& common, const TrainOptionsCli& options);
int run_score(const CommonOptions& common, const ScoreOptionsCli& options);
int run_evaluate(const CommonOptions& common, const EvaluateOptions& options);
int run_serve(const CommonOptions& common, const ServeOptions& options);

}  // namespace fleetmon::cli

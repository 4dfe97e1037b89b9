// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file store.hpp
/// @brief Embedded sharded time-series store.
///
/// Rows are series-hours addressed by salted keys (see tskey); a ShardMap
/// assigns salt ranges to shards. Points are 8-byte doubles at millisecond
/// offsets within their row. Duplicate (series, timestamp) writes overwrite.

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "fleetmon/sim/fleet.hpp"
#include "fleetmon/tskey/id_registry.hpp"
#include "fleetmon/tskey/key_codec.hpp"
#include "fleetmon/tskey/shard_map.hpp"
#include "fleetmon/tstore/shard.hpp"

namespace fleetmon::tstore {

using tskey::Tags;

struct StoreOptions {
  std::uint32_t n_shards{4};
  unsigned n_salt_buckets{tskey::kDefaultSaltBuckets};
  std::uint32_t row_bucket_seconds{tskey::kDefaultRowBucketSeconds};
  /// Overrides the uniform split when set.
  std::optional<tskey::ShardMap> shard_map;
  /// Empty: memory only. Otherwise logs live here and are replayed on open;
  /// the layout stored in the directory takes precedence over these fields.
  std::filesystem::path data_dir;
};

struct TagFilter {
  std::string name;
  std::optional<std::string> value;  ///< nullopt: any value (wildcard)
};

struct QueryRange {
  std::string metric;
  std::vector<TagFilter> filters;
  std::int64_t start_ms{0};
  std::int64_t end_ms{0};  ///< inclusive
};

struct SeriesPoint {
  std::int64_t timestamp_ms{0};
  double value{0.0};

  bool operator==(const SeriesPoint&) const = default;
};

struct SeriesResult {
  Tags tags;
  std::vector<SeriesPoint> points;

  bool operator==(const SeriesResult&) const = default;
};

/// Pre-resolved placement of one series; lets hot paths skip the registry.
struct SeriesRoute {
  std::string series_id;
  std::uint8_t salt{0};
  std::uint32_t shard{0};
};

class Store {
 public:
  explicit Store(StoreOptions options = {});
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  /// Resolves (and registers) a series. `tags` need not be sorted.
  SeriesRoute route(std::string_view metric, Tags tags);
  SeriesRoute route(std::uint32_t unit_id, std::uint32_t sensor_id);

  /// Throws UnavailableError once closed, ValidationError on negative or
  /// out-of-range timestamps and non-finite values.
  void put(const SeriesRoute& route, std::int64_t timestamp_ms, double value);
  void put(const sim::SensorSample& sample);
  void put(std::string_view metric, Tags tags, std::int64_t timestamp_ms,
           double value);

  /// Series sorted by tags; points sorted by time. Unknown metric -> empty.
  std::vector<SeriesResult> query(const QueryRange& range) const;

  std::vector<ShardStats> shard_stats() const;

  /// Every series ever written under `metric`, sorted by tags.
  std::vector<Tags> list_series(std::string_view metric) const;
  std::optional<std::int64_t> latest_timestamp(std::string_view metric) const;

  void flush();
  /// Flushes and rejects further writes. Reads keep working.
  void close();
  bool is_open() const noexcept { return open_.load(); }

  const tskey::IdRegistry& registry() const noexcept { return *registry_; }
  const tskey::ShardMap& shard_map() const noexcept { return shard_map_; }
  const StoreOptions& options() const noexcept { return options_; }

 private:
  void load_or_write_layout();

  StoreOptions options_;
  tskey::ShardMap shard_map_;
  std::unique_ptr<tskey::IdRegistry> registry_;
  std::vector<std::unique_ptr<Shard>> shards_;

  mutable std::shared_mutex catalog_mutex_;
  std::map<std::string, std::uint8_t> catalog_;  // series id -> salt

  class IdJournal;
  std::unique_ptr<IdJournal> id_journal_;
  std::atomic<bool> open_{true};
};

/// Tags of a SensorSample series: {sensor, unit}.
Tags sensor_tags(std::uint32_t unit_id, std::uint32_t sensor_id);

/// Reads an integer tag, throwing ValidationError if missing or malformed.
std::uint32_t tag_as_uint(const Tags& tags, std::string_view name);

}  // namespace fleetmon::tstore

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fleetmon::tstore {

class ShardLog;

/// Points of one series-hour row, sorted by offset (ms from the row base).
struct Row {
  std::vector<std::uint32_t> offsets;
  std::vector<double> values;

  /// Returns true when a new point was added, false on overwrite.
  bool put(std::uint32_t offset, double value);
  std::size_t size() const noexcept { return offsets.size(); }
};

struct ShardStats {
  std::uint32_t shard_id{0};
  std::uint64_t write_counter{0};
  std::uint64_t stored_points{0};

  bool operator==(const ShardStats&) const = default;
};

/// One key-range partition. Writers take the exclusive lock per write;
/// scans hold the shared lock for their whole range, which gives each scan a
/// consistent snapshot of the shard.
class Shard {
 public:
  using RowVisitor = std::function<void(std::string_view key, const Row& row)>;

  Shard(std::uint32_t id, const std::optional<std::filesystem::path>& log_path);
  ~Shard();

  Shard(const Shard&) = delete;
  Shard& operator=(const Shard&) = delete;

  void put(std::string_view row_key, std::uint32_t offset, double value);

  /// Visits rows with begin <= key < end in key order.
  void scan(std::string_view begin, std::string_view end,
            const RowVisitor& visit) const;

  ShardStats stats() const;
  std::optional<std::int64_t> latest_timestamp(std::uint32_t metric_id) const;

  /// Rebuilds memory state from the log without re-appending.
  void replay(const std::filesystem::path& log_path);
  void flush();

 private:
  void apply(std::string_view row_key, std::uint32_t offset, double value);

  std::uint32_t id_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Row, std::less<>> rows_;
  std::uint64_t write_counter_{0};
  std::uint64_t stored_points_{0};
  std::unordered_map<std::uint32_t, std::int64_t> latest_ms_;
  std::unique_ptr<ShardLog> log_;
};

}  // namespace fleetmon::tstore

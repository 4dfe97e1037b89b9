// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/tstore/shard.hpp"

#include <algorithm>
#include <mutex>

#include "fleetmon/tskey/key_codec.hpp"
#include "fleetmon/tstore/shard_log.hpp"

namespace fleetmon::tstore {

bool Row::put(std::uint32_t offset, double value) {
  if (offsets.empty() || offset > offsets.back()) {
    offsets.push_back(offset);
    values.push_back(value);
    return true;
  }
  const auto it = std::lower_bound(offsets.begin(), offsets.end(), offset);
  const auto pos = static_cast<std::size_t>(it - offsets.begin());
  if (it != offsets.end() && *it == offset) {
    values[pos] = value;  // last write wins
    return false;
  }
  offsets.insert(it, offset);
  values.insert(values.begin() + static_cast<std::ptrdiff_t>(pos), value);
  return true;
}

Shard::Shard(std::uint32_t id, const std::optional<std::filesystem::path>& log_path)
    : id_(id) {
  if (log_path) {
    if (std::filesystem::exists(*log_path)) replay(*log_path);
    log_ = std::make_unique<ShardLog>(*log_path);
  }
}

Shard::~Shard() {
  if (log_) {
    try {
      log_->flush();
    } catch (...) {
    }
  }
}

void Shard::apply(std::string_view row_key, std::uint32_t offset, double value) {
  auto it = rows_.find(row_key);
  if (it == rows_.end()) it = rows_.emplace(std::string(row_key), Row{}).first;
  if (it->second.put(offset, value)) ++stored_points_;
  ++write_counter_;

  const auto metric_id = static_cast<std::uint32_t>(
      tskey::get_be(row_key, tskey::kSaltWidth, tskey::kMetricIdWidth));
  const auto base = static_cast<std::int64_t>(tskey::get_be(
      row_key, tskey::kSaltWidth + tskey::kMetricIdWidth, tskey::kTimestampWidth));
  const std::int64_t ts = base * 1000 + offset;
  auto [latest, inserted] = latest_ms_.try_emplace(metric_id, ts);
  if (!inserted && ts > latest->second) latest->second = ts;
}

void Shard::put(std::string_view row_key, std::uint32_t offset, double value) {
  std::unique_lock lock(mutex_);
  apply(row_key, offset, value);
  if (log_) log_->append(row_key, offset, value);
}

void Shard::scan(std::string_view begin, std::string_view end,
                 const RowVisitor& visit) const {
  std::shared_lock lock(mutex_);
  for (auto it = rows_.lower_bound(begin); it != rows_.end() && it->first < end; ++it)
    visit(it->first, it->second);
}

ShardStats Shard::stats() const {
  std::shared_lock lock(mutex_);
  return {id_, write_counter_, stored_points_};
}

std::optional<std::int64_t> Shard::latest_timestamp(std::uint32_t metric_id) const {
  std::shared_lock lock(mutex_);
  if (auto it = latest_ms_.find(metric_id); it != latest_ms_.end()) return it->second;
  return std::nullopt;
}

void Shard::replay(const std::filesystem::path& log_path) {
  std::unique_lock lock(mutex_);
  ShardLog::read(log_path, [&](std::string_view key, std::uint32_t offset, double value) {
    apply(key, offset, value);
  });
}

void Shard::flush() {
  std::unique_lock lock(mutex_);
  if (log_) log_->flush();
}

}  // namespace fleetmon::tstore

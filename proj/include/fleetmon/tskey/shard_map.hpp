// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "fleetmon/tskey/key_codec.hpp"

namespace fleetmon::tskey {

/// Salt values [begin, end) owned by one shard.
struct SaltRange {
  unsigned begin{0};
  unsigned end{0};
  std::uint32_t shard_id{0};

  bool operator==(const SaltRange&) const = default;
};

/// Manual region split of the salt space onto shards.
class ShardMap {
 public:
  ShardMap() = default;
  /// Throws ConfigError unless the ranges are disjoint, contiguous and cover
  /// [0, n_salt_buckets) exactly.
  ShardMap(std::vector<SaltRange> ranges, unsigned n_salt_buckets);

  /// Splits the buckets into `n_shards` contiguous ranges whose sizes differ
  /// by at most one. Shards beyond the bucket count own an empty range.
  static ShardMap uniform(unsigned n_salt_buckets, std::uint32_t n_shards);

  /// Throws ConfigError when no range covers the salt.
  std::uint32_t shard_for_salt(unsigned salt) const;

  const std::vector<SaltRange>& ranges() const noexcept { return ranges_; }
  unsigned n_salt_buckets() const noexcept { return n_salt_buckets_; }
  std::uint32_t n_shards() const noexcept;

 private:
  std::vector<SaltRange> ranges_;
  unsigned n_salt_buckets_{0};
  std::vector<std::uint32_t> lookup_;  // salt -> shard
};

std::uint32_t shard_for_key(const EncodedKey& encoded, const ShardMap& shard_map);

}  // namespace fleetmon::tskey

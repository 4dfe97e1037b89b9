// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/tskey/shard_map.hpp"

#include <algorithm>
#include <string>

#include "fleetmon/error.hpp"

namespace fleetmon::tskey {

ShardMap::ShardMap(std::vector<SaltRange> ranges, unsigned n_salt_buckets)
    : ranges_(std::move(ranges)), n_salt_buckets_(n_salt_buckets) {
  if (n_salt_buckets_ < 1 || n_salt_buckets_ > kMaxSaltBuckets)
    throw ConfigError("shard map: n_salt_buckets must be in [1, 256]");
  std::vector<SaltRange> sorted = ranges_;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SaltRange& a, const SaltRange& b) {
                     return a.begin < b.begin;
                   });
  unsigned next = 0;
  for (const SaltRange& r : sorted) {
    if (r.end < r.begin) throw ConfigError("shard map: range end before begin");
    if (r.begin == r.end) continue;
    if (r.begin != next)
      throw ConfigError("shard map: salt " + std::to_string(next) +
                        (r.begin > next ? " is not covered" : " is covered twice"));
    next = r.end;
  }
  if (next != n_salt_buckets_)
    throw ConfigError("shard map: salt " + std::to_string(next) + " is not covered");
  lookup_.assign(n_salt_buckets_, 0);
  for (const SaltRange& r : ranges_)
    for (unsigned s = r.begin; s < r.end; ++s) lookup_[s] = r.shard_id;
}

ShardMap ShardMap::uniform(unsigned n_salt_buckets, std::uint32_t n_shards) {
  if (n_shards < 1) throw ConfigError("shard map: n_shards must be >= 1");
  std::vector<SaltRange> ranges;
  ranges.reserve(n_shards);
  for (std::uint32_t i = 0; i < n_shards; ++i) {
    const auto begin = static_cast<unsigned>(
        static_cast<std::uint64_t>(n_salt_buckets) * i / n_shards);
    const auto end = static_cast<unsigned>(
        static_cast<std::uint64_t>(n_salt_buckets) * (i + 1) / n_shards);
    ranges.push_back({begin, end, i});
  }
  // Fewer buckets than shards: everything collapses onto the first shards.
  if (n_salt_buckets < n_shards) {
    for (std::uint32_t i = 0; i < n_shards; ++i)
      ranges[i] = i < n_salt_buckets ? SaltRange{i, i + 1, i} : SaltRange{0, 0, i};
  }
  return ShardMap(std::move(ranges), n_salt_buckets);
}

std::uint32_t ShardMap::shard_for_salt(unsigned salt) const {
  if (salt >= lookup_.size())
    throw ConfigError("shard map: salt " + std::to_string(salt) + " is not covered");
  return lookup_[salt];
}

std::uint32_t ShardMap::n_shards() const noexcept {
  std::uint32_t n = 0;
  for (const SaltRange& r : ranges_) n = std::max(n, r.shard_id + 1);
  return n;
}

std::uint32_t shard_for_key(const EncodedKey& encoded, const ShardMap& shard_map) {
  return shard_map.shard_for_salt(encoded.salt());
}

}  // namespace fleetmon::tskey

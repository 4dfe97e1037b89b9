// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file key_codec.hpp
/// @brief Salted binary row keys for series-hour rows.
///
/// Layout (big-endian, so byte order == numeric order):
///
///   [salt:1][metric_id:3][base_timestamp:4]([tag_name_id:3][tag_value_id:3])*
///
/// The salt is a stable hash of the series identity (metric id + tag ids), so
/// every row of one series lands in the same bucket while distinct series
/// spread across buckets. With one bucket the salt is always 0, which is the
/// plain, hotspotting layout.

#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fleetmon/tskey/id_registry.hpp"

namespace fleetmon::tskey {

inline constexpr std::size_t kSaltWidth = 1;
inline constexpr std::size_t kMetricIdWidth = 3;
inline constexpr std::size_t kTimestampWidth = 4;
inline constexpr std::size_t kTagNameIdWidth = 3;
inline constexpr std::size_t kTagValueIdWidth = 3;
inline constexpr std::size_t kTagPairWidth = kTagNameIdWidth + kTagValueIdWidth;
inline constexpr std::size_t kKeyPrefixWidth =
    kSaltWidth + kMetricIdWidth + kTimestampWidth;

inline constexpr std::uint32_t kDefaultRowBucketSeconds = 3600;
inline constexpr unsigned kDefaultSaltBuckets = 16;
inline constexpr unsigned kMaxSaltBuckets = 256;

using Tags = std::vector<std::pair<std::string, std::string>>;

struct SeriesKey {
  std::string metric;
  Tags tags;  ///< sorted by name, unique names
  std::uint32_t base_timestamp{0};  ///< seconds, multiple of the row bucket

  /// Sorts tags and truncates `timestamp_s` to its row bucket. Throws
  /// ValidationError on duplicate tag names or out-of-range timestamps.
  static SeriesKey make(std::string metric, Tags tags, std::int64_t timestamp_s,
                        std::uint32_t row_bucket_seconds = kDefaultRowBucketSeconds);

  void validate(std::uint32_t row_bucket_seconds = kDefaultRowBucketSeconds) const;

  bool operator==(const SeriesKey&) const = default;
};

/// Owned key bytes. Ordering is plain byte-lexicographic.
class EncodedKey {
 public:
  EncodedKey() = default;
  explicit EncodedKey(std::string bytes) : bytes_(std::move(bytes)) {}

  const std::string& bytes() const noexcept { return bytes_; }
  std::size_t size() const noexcept { return bytes_.size(); }
  std::uint8_t salt() const noexcept;
  std::uint32_t metric_id() const noexcept;
  std::uint32_t base_timestamp() const noexcept;
  std::size_t tag_count() const noexcept;

  /// metric id followed by tag id pairs: the salt-free series identity.
  std::string series_id() const;

  std::string hex() const;
  static EncodedKey from_hex(std::string_view hex);

  auto operator<=>(const EncodedKey&) const = default;

 private:
  std::string bytes_;
};

/// Length of a key with `n_tags` tag pairs.
constexpr std::size_t encoded_key_size(std::size_t n_tags) noexcept {
  return kKeyPrefixWidth + n_tags * kTagPairWidth;
}

/// FNV-1a (64-bit) folded through the MurmurHash3 fmix64 finalizer. Both
/// steps are published and seedless; golden-vector tests pin the output.
std::uint64_t stable_hash(std::string_view bytes) noexcept;

std::uint8_t salt_for_series(std::string_view series_id,
                             unsigned n_salt_buckets) noexcept;

/// Series identity bytes (metric id + tag id pairs), assigning ids as needed.
std::string encode_series_id(std::string_view metric, const Tags& sorted_tags,
                             IdRegistry& registry);

/// Splices salt and base timestamp into a series identity.
std::string make_row_key(std::uint8_t salt, std::string_view series_id,
                         std::uint32_t base_timestamp);

/// Throws ConfigError when n_salt_buckets is outside [1, 256], CapacityError
/// when an id namespace overflows.
EncodedKey encode_key(const SeriesKey& key, unsigned n_salt_buckets,
                      IdRegistry& registry);

/// Ignores the salt byte. Throws CorruptionError on unknown ids or a
/// malformed length.
SeriesKey decode_key(const EncodedKey& encoded, const IdRegistry& registry);

void put_be(std::string& out, std::uint64_t value, std::size_t width);
std::uint64_t get_be(std::string_view in, std::size_t offset, std::size_t width) noexcept;

}  // namespace fleetmon::tskey

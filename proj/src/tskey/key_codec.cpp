// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/tskey/key_codec.hpp"

#include <algorithm>
#include <limits>

#include "fleetmon/error.hpp"

namespace fleetmon::tskey {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fmix64(std::uint64_t k) noexcept {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

void put_be(std::string& out, std::uint64_t value, std::size_t width) {
  for (std::size_t i = width; i-- > 0;)
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

std::uint64_t get_be(std::string_view in, std::size_t offset,
                     std::size_t width) noexcept {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i)
    v = (v << 8) | static_cast<std::uint8_t>(in[offset + i]);
  return v;
}

SeriesKey SeriesKey::make(std::string metric, Tags tags, std::int64_t timestamp_s,
                          std::uint32_t row_bucket_seconds) {
  if (row_bucket_seconds == 0) throw ConfigError("row bucket must be > 0 seconds");
  if (timestamp_s < 0 || timestamp_s > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError("timestamp " + std::to_string(timestamp_s) +
                          "s does not fit the 4-byte key field");
  std::sort(tags.begin(), tags.end());
  SeriesKey key;
  key.metric = std::move(metric);
  key.tags = std::move(tags);
  key.base_timestamp = static_cast<std::uint32_t>(
      timestamp_s - timestamp_s % row_bucket_seconds);
  key.validate(row_bucket_seconds);
  return key;
}

void SeriesKey::validate(std::uint32_t row_bucket_seconds) const {
  if (metric.empty()) throw ValidationError("metric name is empty");
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].first.empty()) throw ValidationError("tag name is empty");
    if (i > 0 && !(tags[i - 1].first < tags[i].first))
      throw ValidationError("tags must be sorted by name without duplicates ('" +
                            tags[i].first + "')");
  }
  if (row_bucket_seconds == 0 || base_timestamp % row_bucket_seconds != 0)
    throw ValidationError("base timestamp is not aligned to the row bucket");
}

std::uint8_t EncodedKey::salt() const noexcept {
  return bytes_.empty() ? 0 : static_cast<std::uint8_t>(bytes_[0]);
}

std::uint32_t EncodedKey::metric_id() const noexcept {
  return static_cast<std::uint32_t>(get_be(bytes_, kSaltWidth, kMetricIdWidth));
}

std::uint32_t EncodedKey::base_timestamp() const noexcept {
  return static_cast<std::uint32_t>(
      get_be(bytes_, kSaltWidth + kMetricIdWidth, kTimestampWidth));
}

std::size_t EncodedKey::tag_count() const noexcept {
  return bytes_.size() < kKeyPrefixWidth
             ? 0
             : (bytes_.size() - kKeyPrefixWidth) / kTagPairWidth;
}

std::string EncodedKey::series_id() const {
  std::string id = bytes_.substr(kSaltWidth, kMetricIdWidth);
  id.append(bytes_, kKeyPrefixWidth, std::string::npos);
  return id;
}

std::string EncodedKey::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes_.size() * 2);
  for (unsigned char c : bytes_) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xf]);
  }
  return out;
}

EncodedKey EncodedKey::from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ValidationError("odd-length hex key");
  std::string bytes;
  bytes.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = hex_digit(hex[i]);
    const int lo = hex_digit(hex[i + 1]);
    if (hi < 0 || lo < 0) throw ValidationError("non-hex digit in key");
    bytes.push_back(static_cast<char>(hi << 4 | lo));
  }
  return EncodedKey(std::move(bytes));
}

std::uint64_t stable_hash(std::string_view bytes) noexcept {
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return fmix64(h);
}

std::uint8_t salt_for_series(std::string_view series_id,
                             unsigned n_salt_buckets) noexcept {
  if (n_salt_buckets <= 1) return 0;
  return static_cast<std::uint8_t>(stable_hash(series_id) % n_salt_buckets);
}

std::string encode_series_id(std::string_view metric, const Tags& sorted_tags,
                             IdRegistry& registry) {
  std::string id;
  id.reserve(kMetricIdWidth + sorted_tags.size() * kTagPairWidth);
  put_be(id, registry.get_or_assign(IdKind::kMetric, metric), kMetricIdWidth);
  for (const auto& [name, value] : sorted_tags) {
    put_be(id, registry.get_or_assign(IdKind::kTagName, name), kTagNameIdWidth);
    put_be(id, registry.get_or_assign(IdKind::kTagValue, value), kTagValueIdWidth);
  }
  return id;
}

std::string make_row_key(std::uint8_t salt, std::string_view series_id,
                         std::uint32_t base_timestamp) {
  std::string key;
  key.reserve(kSaltWidth + series_id.size() + kTimestampWidth);
  key.push_back(static_cast<char>(salt));
  key.append(series_id.substr(0, kMetricIdWidth));
  put_be(key, base_timestamp, kTimestampWidth);
  key.append(series_id.substr(kMetricIdWidth));
  return key;
}

EncodedKey encode_key(const SeriesKey& key, unsigned n_salt_buckets,
                      IdRegistry& registry) {
  if (n_salt_buckets < 1 || n_salt_buckets > kMaxSaltBuckets)
    throw ConfigError("n_salt_buckets must be in [1, 256]");
  key.validate(1);
  const std::string series = encode_series_id(key.metric, key.tags, registry);
  return EncodedKey(make_row_key(salt_for_series(series, n_salt_buckets), series,
                                 key.base_timestamp));
}

SeriesKey decode_key(const EncodedKey& encoded, const IdRegistry& registry) {
  const std::string& b = encoded.bytes();
  if (b.size() < kKeyPrefixWidth || (b.size() - kKeyPrefixWidth) % kTagPairWidth)
    throw CorruptionError("encoded key has invalid length " +
                          std::to_string(b.size()));
  SeriesKey key;
  const auto metric = registry.name(IdKind::kMetric, encoded.metric_id());
  if (!metric)
    throw CorruptionError("unknown metric id " +
                          std::to_string(encoded.metric_id()));
  key.metric = *metric;
  key.base_timestamp = encoded.base_timestamp();
  for (std::size_t off = kKeyPrefixWidth; off < b.size(); off += kTagPairWidth) {
    const auto name_id = static_cast<UniqueId>(get_be(b, off, kTagNameIdWidth));
    const auto value_id = static_cast<UniqueId>(
        get_be(b, off + kTagNameIdWidth, kTagValueIdWidth));
    auto name = registry.name(IdKind::kTagName, name_id);
    auto value = registry.name(IdKind::kTagValue, value_id);
    if (!name) throw CorruptionError("unknown tag name id " + std::to_string(name_id));
    if (!value)
      throw CorruptionError("unknown tag value id " + std::to_string(value_id));
    key.tags.emplace_back(std::move(*name), std::move(*value));
  }
  return key;
}

}  // namespace fleetmon::tskey

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/tstore/store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>

#include <json.hpp>

#include "fleetmon/error.hpp"
#include "fleetmon/sim/records.hpp"
#include "fleetmon/tstore/shard_log.hpp"

namespace fleetmon::tstore {

namespace {

constexpr int kLayoutVersion = 1;
constexpr std::int64_t kMaxTimestampMs =
    static_cast<std::int64_t>(std::numeric_limits<std::uint32_t>::max()) * 1000 + 999;

std::filesystem::path shard_log_path(const std::filesystem::path& dir,
                                     std::uint32_t shard) {
  return dir / ("shard-" + std::to_string(shard) + ".log");
}

struct FilterIds {
  tskey::UniqueId name_id;
  std::optional<tskey::UniqueId> value_id;
};

// True when the tag-pair bytes (starting at `offset` of `bytes`) satisfy
// every filter.
bool tags_match(std::string_view bytes, std::size_t offset,
                const std::vector<FilterIds>& filters) {
  for (const FilterIds& f : filters) {
    bool found = false;
    for (std::size_t off = offset; off + tskey::kTagPairWidth <= bytes.size();
         off += tskey::kTagPairWidth) {
      if (tskey::get_be(bytes, off, tskey::kTagNameIdWidth) != f.name_id) continue;
      found = !f.value_id ||
              tskey::get_be(bytes, off + tskey::kTagNameIdWidth,
                            tskey::kTagValueIdWidth) == *f.value_id;
      break;
    }
    if (!found) return false;
  }
  return true;
}

Tags decode_tags(std::string_view series_id, const tskey::IdRegistry& registry) {
  Tags tags;
  for (std::size_t off = tskey::kMetricIdWidth; off < series_id.size();
       off += tskey::kTagPairWidth) {
    auto name = registry.name(tskey::IdKind::kTagName,
                              static_cast<tskey::UniqueId>(tskey::get_be(
                                  series_id, off, tskey::kTagNameIdWidth)));
    auto value = registry.name(
        tskey::IdKind::kTagValue,
        static_cast<tskey::UniqueId>(tskey::get_be(
            series_id, off + tskey::kTagNameIdWidth, tskey::kTagValueIdWidth)));
    if (!name || !value) throw CorruptionError("series references unknown tag id");
    tags.emplace_back(std::move(*name), std::move(*value));
  }
  return tags;
}

}  // namespace

class Store::IdJournal {
 public:
  explicit IdJournal(const std::filesystem::path& path) : log_(path) {}
  void append(tskey::IdKind kind, tskey::UniqueId id, std::string_view name) {
    std::lock_guard lock(mutex_);
    log_.append(static_cast<std::uint8_t>(kind), id, name);
  }
  void flush() {
    std::lock_guard lock(mutex_);
    log_.flush();
  }

 private:
  std::mutex mutex_;
  IdLog log_;
};

Tags sensor_tags(std::uint32_t unit_id, std::uint32_t sensor_id) {
  return {{"sensor", std::to_string(sensor_id)}, {"unit", std::to_string(unit_id)}};
}

std::uint32_t tag_as_uint(const Tags& tags, std::string_view name) {
  for (const auto& [k, v] : tags) {
    if (k != name) continue;
    std::uint32_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
      throw ValidationError("tag " + std::string(name) + "='" + v +
                            "' is not an unsigned integer");
    return out;
  }
  throw ValidationError("missing tag '" + std::string(name) + "'");
}

Store::Store(StoreOptions options)
    : options_(std::move(options)), registry_(std::make_unique<tskey::IdRegistry>()) {
  if (!options_.data_dir.empty()) {
    std::filesystem::create_directories(options_.data_dir);
    load_or_write_layout();
  }
  if (options_.n_shards < 1) throw ConfigError("store n_shards must be >= 1");
  if (options_.n_salt_buckets < 1 || options_.n_salt_buckets > tskey::kMaxSaltBuckets)
    throw ConfigError("store n_salt_buckets must be in [1, 256]");
  if (options_.row_bucket_seconds < 1)
    throw ConfigError("store row_bucket_seconds must be >= 1");
  shard_map_ = options_.shard_map
                   ? *options_.shard_map
                   : tskey::ShardMap::uniform(options_.n_salt_buckets, options_.n_shards);
  if (shard_map_.n_salt_buckets() != options_.n_salt_buckets)
    throw ConfigError("shard map bucket count differs from n_salt_buckets");
  if (shard_map_.n_shards() > options_.n_shards)
    throw ConfigError("shard map references more shards than n_shards");

  if (!options_.data_dir.empty()) {
    const auto id_path = options_.data_dir / "ids.log";
    if (std::filesystem::exists(id_path)) {
      IdLog::read(id_path, [&](std::uint8_t kind, std::uint32_t id, std::string_view name) {
        if (kind > 2) throw CorruptionError("id log has unknown namespace");
        registry_->restore(static_cast<tskey::IdKind>(kind), id, name);
      });
    }
    id_journal_ = std::make_unique<IdJournal>(id_path);
    registry_->set_listener(
        [journal = id_journal_.get()](tskey::IdKind kind, tskey::UniqueId id,
                                      std::string_view name) {
          journal->append(kind, id, name);
        });
  }

  shards_.reserve(options_.n_shards);
  for (std::uint32_t i = 0; i < options_.n_shards; ++i) {
    std::optional<std::filesystem::path> log;
    if (!options_.data_dir.empty()) log = shard_log_path(options_.data_dir, i);
    shards_.push_back(std::make_unique<Shard>(i, log));
  }

  // Rebuild the series catalog from replayed rows.
  if (!options_.data_dir.empty()) {
    for (const auto& shard : shards_) {
      shard->scan({}, std::string(64, '\xff'),
                  [&](std::string_view key, const Row&) {
                    const tskey::EncodedKey k{std::string(key)};
                    catalog_.emplace(k.series_id(), k.salt());
                  });
    }
  }
}

Store::~Store() {
  try {
    flush();
  } catch (...) {
  }
}

void Store::load_or_write_layout() {
  const auto path = options_.data_dir / "layout.json";
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw CorruptionError(path.string() + ": " + e.what());
    }
    if (j.value("version", 0) != kLayoutVersion)
      throw MigrationError(path.string() + ": unsupported layout version");
    options_.n_shards = j.at("n_shards").get<std::uint32_t>();
    options_.n_salt_buckets = j.at("n_salt_buckets").get<unsigned>();
    options_.row_bucket_seconds = j.at("row_bucket_seconds").get<std::uint32_t>();
    std::vector<tskey::SaltRange> ranges;
    for (const auto& r : j.at("ranges"))
      ranges.push_back({r.at(0).get<unsigned>(), r.at(1).get<unsigned>(),
                        r.at(2).get<std::uint32_t>()});
    options_.shard_map = tskey::ShardMap(std::move(ranges), options_.n_salt_buckets);
    return;
  }
  const tskey::ShardMap map =
      options_.shard_map
          ? *options_.shard_map
          : tskey::ShardMap::uniform(options_.n_salt_buckets, options_.n_shards);
  nlohmann::json j;
  j["version"] = kLayoutVersion;
  j["n_shards"] = options_.n_shards;
  j["n_salt_buckets"] = options_.n_salt_buckets;
  j["row_bucket_seconds"] = options_.row_bucket_seconds;
  j["ranges"] = nlohmann::json::array();
  for (const auto& r : map.ranges())
    j["ranges"].push_back({r.begin, r.end, r.shard_id});
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

SeriesRoute Store::route(std::string_view metric, Tags tags) {
  std::sort(tags.begin(), tags.end());
  for (std::size_t i = 1; i < tags.size(); ++i) {
    if (tags[i - 1].first == tags[i].first)
      throw ValidationError("duplicate tag '" + tags[i].first + "'");
  }
  for (const auto& [k, v] : tags) {
    if (k.empty() || v.empty()) throw ValidationError("empty tag name or value");
  }
  if (metric.empty()) throw ValidationError("metric name is empty");
  SeriesRoute r;
  r.series_id = tskey::encode_series_id(metric, tags, *registry_);
  r.salt = tskey::salt_for_series(r.series_id, options_.n_salt_buckets);
  r.shard = shard_map_.shard_for_salt(r.salt);
  {
    std::shared_lock lock(catalog_mutex_);
    if (catalog_.contains(r.series_id)) return r;
  }
  std::unique_lock lock(catalog_mutex_);
  catalog_.emplace(r.series_id, r.salt);
  return r;
}

SeriesRoute Store::route(std::uint32_t unit_id, std::uint32_t sensor_id) {
  return route(sim::kEnergyMetric, sensor_tags(unit_id, sensor_id));
}

void Store::put(const SeriesRoute& route, std::int64_t timestamp_ms, double value) {
  if (!open_.load(std::memory_order_relaxed))
    throw UnavailableError("store is closed");
  if (timestamp_ms < 0 || timestamp_ms > kMaxTimestampMs)
    throw ValidationError("timestamp " + std::to_string(timestamp_ms) +
                          " ms is out of range");
  if (!std::isfinite(value)) throw ValidationError("value is not finite");
  const std::int64_t seconds = timestamp_ms / 1000;
  const auto base = static_cast<std::uint32_t>(seconds - seconds % options_.row_bucket_seconds);
  const auto offset = static_cast<std::uint32_t>(timestamp_ms - std::int64_t{base} * 1000);
  thread_local std::string key;
  key.clear();
  key.push_back(static_cast<char>(route.salt));
  key.append(route.series_id, 0, tskey::kMetricIdWidth);
  tskey::put_be(key, base, tskey::kTimestampWidth);
  key.append(route.series_id, tskey::kMetricIdWidth, std::string::npos);
  shards_[route.shard]->put(key, offset, value);
}

void Store::put(const sim::SensorSample& sample) {
  put(route(sample.unit_id, sample.sensor_id), sample.timestamp_ms, sample.value);
}

void Store::put(std::string_view metric, Tags tags, std::int64_t timestamp_ms,
                double value) {
  put(route(metric, std::move(tags)), timestamp_ms, value);
}

std::vector<SeriesResult> Store::query(const QueryRange& range) const {
  if (range.start_ms > range.end_ms)
    throw ValidationError("query start is after end");
  std::vector<SeriesResult> out;
  const auto metric_id = registry_->find(tskey::IdKind::kMetric, range.metric);
  if (!metric_id || range.end_ms < 0) return out;

  std::vector<FilterIds> filters;
  for (const TagFilter& f : range.filters) {
    const auto name_id = registry_->find(tskey::IdKind::kTagName, f.name);
    if (!name_id) return out;
    FilterIds ids{*name_id, std::nullopt};
    if (f.value) {
      const auto value_id = registry_->find(tskey::IdKind::kTagValue, *f.value);
      if (!value_id) return out;
      ids.value_id = *value_id;
    }
    filters.push_back(ids);
  }

  // Salt buckets holding at least one matching series; wildcard filters fan
  // out across many of them.
  std::string metric_bytes;
  tskey::put_be(metric_bytes, *metric_id, tskey::kMetricIdWidth);
  std::set<unsigned> salts;
  {
    std::shared_lock lock(catalog_mutex_);
    for (auto it = catalog_.lower_bound(metric_bytes);
         it != catalog_.end() && it->first.starts_with(metric_bytes); ++it) {
      if (tags_match(it->first, tskey::kMetricIdWidth, filters))
        salts.insert(it->second);
    }
  }

  const std::int64_t start_ms = std::max<std::int64_t>(range.start_ms, 0);
  const std::int64_t end_ms = std::min(range.end_ms, kMaxTimestampMs);
  const std::int64_t bucket = options_.row_bucket_seconds;
  const std::int64_t base_begin = (start_ms / 1000) / bucket * bucket;
  const std::int64_t base_end = (end_ms / 1000) / bucket * bucket;

  std::map<std::string, std::vector<SeriesPoint>> by_series;
  for (unsigned salt : salts) {
    std::string begin(1, static_cast<char>(salt));
    begin += metric_bytes;
    std::string end = begin;
    tskey::put_be(begin, static_cast<std::uint64_t>(base_begin), tskey::kTimestampWidth);
    if (base_end + bucket > std::numeric_limits<std::uint32_t>::max()) {
      // Past the last representable bucket: bound by the next metric id.
      end = std::string(1, static_cast<char>(salt));
      tskey::put_be(end, *metric_id + 1ULL, tskey::kMetricIdWidth);
    } else {
      tskey::put_be(end, static_cast<std::uint64_t>(base_end + bucket),
                    tskey::kTimestampWidth);
    }
    shards_[shard_map_.shard_for_salt(salt)]->scan(
        begin, end, [&](std::string_view key, const Row& row) {
          if (!tags_match(key, tskey::kKeyPrefixWidth, filters)) return;
          const std::int64_t base_ms =
              static_cast<std::int64_t>(tskey::get_be(
                  key, tskey::kSaltWidth + tskey::kMetricIdWidth, tskey::kTimestampWidth)) *
              1000;
          const auto lo = std::lower_bound(
              row.offsets.begin(), row.offsets.end(),
              static_cast<std::uint32_t>(std::clamp<std::int64_t>(start_ms - base_ms, 0, UINT32_MAX)));
          std::vector<SeriesPoint>* points = nullptr;
          for (auto it = lo; it != row.offsets.end(); ++it) {
            const std::int64_t ts = base_ms + *it;
            if (ts > end_ms) break;
            if (!points) {
              std::string series(key.substr(tskey::kSaltWidth, tskey::kMetricIdWidth));
              series.append(key.substr(tskey::kKeyPrefixWidth));
              points = &by_series[series];
            }
            points->push_back({ts, row.values[static_cast<std::size_t>(it - row.offsets.begin())]});
          }
        });
  }

  out.reserve(by_series.size());
  for (auto& [series, points] : by_series)
    out.push_back({decode_tags(series, *registry_), std::move(points)});
  std::sort(out.begin(), out.end(), [](const SeriesResult& a, const SeriesResult& b) {
    return a.tags < b.tags;
  });
  return out;
}

std::vector<ShardStats> Store::shard_stats() const {
  std::vector<ShardStats> stats;
  stats.reserve(shards_.size());
  for (const auto& shard : shards_) stats.push_back(shard->stats());
  return stats;
}

std::vector<Tags> Store::list_series(std::string_view metric) const {
  std::vector<Tags> out;
  const auto metric_id = registry_->find(tskey::IdKind::kMetric, metric);
  if (!metric_id) return out;
  std::string metric_bytes;
  tskey::put_be(metric_bytes, *metric_id, tskey::kMetricIdWidth);
  std::shared_lock lock(catalog_mutex_);
  for (auto it = catalog_.lower_bound(metric_bytes);
       it != catalog_.end() && it->first.starts_with(metric_bytes); ++it)
    out.push_back(decode_tags(it->first, *registry_));
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::int64_t> Store::latest_timestamp(std::string_view metric) const {
  const auto metric_id = registry_->find(tskey::IdKind::kMetric, metric);
  if (!metric_id) return std::nullopt;
  std::optional<std::int64_t> latest;
  for (const auto& shard : shards_) {
    if (const auto ts = shard->latest_timestamp(*metric_id); ts && (!latest || *ts > *latest))
      latest = ts;
  }
  return latest;
}

void Store::flush() {
  if (id_journal_) id_journal_->flush();
  for (const auto& shard : shards_) shard->flush();
}

void Store::close() {
  flush();
  open_.store(false);
}

}  // namespace fleetmon::tstore

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/ingest/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "fleetmon/error.hpp"

namespace fleetmon::ingest {

namespace {

constexpr std::int64_t kMaxTimestampMs = 4294967295LL * 1000 + 999;

std::string validate_sample(const sim::SensorSample& s) {
  if (s.timestamp_ms < 0) return "negative timestamp";
  if (s.timestamp_ms > kMaxTimestampMs) return "timestamp out of range";
  if (!std::isfinite(s.value)) return "non-finite value";
  return {};
}

}  // namespace

OverloadPolicy parse_overload_policy(std::string_view text) {
  if (text == "reject" || text == "RejectWithRetryAfter")
    return OverloadPolicy::kRejectWithRetryAfter;
  if (text == "block" || text == "BlockProducer") return OverloadPolicy::kBlockProducer;
  throw ConfigError("unknown overload policy '" + std::string(text) +
                    "' (expected reject or block)");
}

std::string_view to_string(OverloadPolicy policy) noexcept {
  return policy == OverloadPolicy::kBlockProducer ? "block" : "reject";
}

void GatewayConfig::validate() const {
  if (queue_capacity < 1) throw ConfigError("queue_capacity must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (n_writers < 1) throw ConfigError("n_writers must be >= 1");
}

Gateway::Gateway(tstore::Store& store, GatewayConfig config)
    : store_(store), config_(config) {
  config_.validate();
  queues_.resize(config_.n_writers);
  writers_.reserve(config_.n_writers);
  for (std::size_t i = 0; i < config_.n_writers; ++i)
    writers_.emplace_back([this, i] { writer_loop(i); });
}

Gateway::~Gateway() { stop(); }

SubmitResult Gateway::submit(std::vector<sim::SensorSample>&& batch) {
  SubmitResult result;
  std::unique_lock lock(mutex_);
  if (stopping_) throw UnavailableError("gateway is stopped");
  offered_ += batch.size();
  if (config_.overload_policy == OverloadPolicy::kBlockProducer) {
    space_cv_.wait(lock, [&] { return stopping_ || outstanding_ < config_.queue_capacity; });
    if (stopping_) throw UnavailableError("gateway is stopped");
  } else if (outstanding_ >= config_.queue_capacity) {
    rejected_ += batch.size();
    result.status = SubmitResult::Status::kRejected;
    result.retry_after = retry_hint();
    return result;
  }

  // Invalid records are dropped individually; the rest of the batch proceeds.
  std::vector<sim::SensorSample> valid = std::move(batch);
  batch.clear();
  std::size_t kept = 0;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (std::string why = validate_sample(valid[i]); !why.empty()) {
      result.invalid.push_back({i, std::move(why)});
      continue;
    }
    valid[kept++] = valid[i];
  }
  valid.resize(kept);
  invalid_ += result.invalid.size();
  rejected_ += result.invalid.size();
  accepted_ += kept;
  result.accepted_samples = kept;
  if (kept == 0) return result;

  WriterQueue& q = queues_[next_writer_];
  next_writer_ = (next_writer_ + 1) % queues_.size();
  q.batches.push_back(std::move(valid));
  ++q.assigned;
  ++outstanding_;
  std::size_t seen = max_occupancy_.load();
  while (outstanding_ > seen && !max_occupancy_.compare_exchange_weak(seen, outstanding_)) {
  }
  lock.unlock();
  work_cv_.notify_all();
  return result;
}

std::chrono::milliseconds Gateway::retry_hint() const {
  // Roughly the time for the writers to free one slot each.
  const double batch_ms = static_cast<double>(batch_write_ns_.load()) / 1e6;
  const double waves = std::ceil(static_cast<double>(outstanding_) /
                                 static_cast<double>(config_.n_writers));
  const auto ms = static_cast<std::int64_t>(std::ceil(batch_ms * std::max(1.0, waves) / 4));
  return std::chrono::milliseconds(std::clamp<std::int64_t>(ms, 1, 1000));
}

void Gateway::writer_loop(std::size_t index) {
  std::unordered_map<std::uint64_t, tstore::SeriesRoute> routes;
  for (;;) {
    std::vector<sim::SensorSample> batch;
    {
      std::unique_lock lock(mutex_);
      work_cv_.wait(lock, [&] {
        return (!paused_ && !queues_[index].batches.empty()) ||
               (stopping_ && queues_[index].batches.empty());
      });
      if (queues_[index].batches.empty()) return;
      batch = std::move(queues_[index].batches.front());
      queues_[index].batches.pop_front();
    }

    const auto started = std::chrono::steady_clock::now();
    std::uint64_t written = 0;
    for (const sim::SensorSample& s : batch) {
      const std::uint64_t series = (std::uint64_t{s.unit_id} << 32) | s.sensor_id;
      auto it = routes.find(series);
      try {
        if (it == routes.end())
          it = routes.emplace(series, store_.route(s.unit_id, s.sensor_id)).first;
        store_.put(it->second, s.timestamp_ms, s.value);
        ++written;
      } catch (const Error&) {
        write_failures_.fetch_add(1, std::memory_order_relaxed);
      }
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    const std::int64_t prev = batch_write_ns_.load(std::memory_order_relaxed);
    batch_write_ns_.store(prev == 0 ? elapsed : (prev * 7 + elapsed) / 8,
                          std::memory_order_relaxed);
    stored_.fetch_add(written, std::memory_order_relaxed);

    {
      std::lock_guard lock(mutex_);
      --outstanding_;
    }
    space_cv_.notify_all();
  }
}

void Gateway::drain() {
  std::unique_lock lock(mutex_);
  space_cv_.wait(lock, [&] { return outstanding_ == 0; });
}

void Gateway::stop() {
  {
    std::unique_lock lock(mutex_);
    if (stopped_) return;
    paused_ = false;
  }
  work_cv_.notify_all();
  drain();
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
    stopped_ = true;
  }
  work_cv_.notify_all();
  space_cv_.notify_all();
  for (std::thread& t : writers_) t.join();
  writers_.clear();
  stop_metering();
}

void Gateway::pause() {
  std::lock_guard lock(mutex_);
  paused_ = true;
}

void Gateway::resume() {
  {
    std::lock_guard lock(mutex_);
    paused_ = false;
  }
  work_cv_.notify_all();
}

void Gateway::start_metering() {
  stop_metering();
  {
    std::lock_guard lock(meter_mutex_);
    per_second_.clear();
    meter_start_ = std::chrono::steady_clock::now();
    meter_stop_ = {};
  }
  // The baseline is read here, not in the thread, so samples stored before
  // the meter thread first runs still land in the first interval.
  const std::uint64_t baseline = stored_.load();
  meter_ = std::jthread([this, baseline](std::stop_token token) { meter_loop(token, baseline); });
}

void Gateway::meter_loop(std::stop_token token, std::uint64_t baseline) {
  std::uint64_t last = baseline;
  auto deadline = meter_start_ + std::chrono::seconds(1);
  std::unique_lock lock(meter_mutex_);
  for (;;) {
    if (meter_cv_.wait_until(lock, token, deadline, [] { return false; })) break;
    if (token.stop_requested()) break;
    const std::uint64_t now = stored_.load();
    per_second_.push_back(now - last);
    last = now;
    deadline += std::chrono::seconds(1);
  }
  const std::uint64_t now = stored_.load();
  if (now > last) per_second_.push_back(now - last);
  meter_stop_ = std::chrono::steady_clock::now();
}

void Gateway::stop_metering() {
  if (meter_.joinable()) {
    meter_.request_stop();
    meter_.join();
  }
}

std::size_t Gateway::occupancy() const {
  std::lock_guard lock(mutex_);
  return outstanding_;
}

std::vector<std::uint64_t> Gateway::writer_assignments() const {
  std::lock_guard lock(mutex_);
  std::vector<std::uint64_t> out;
  out.reserve(queues_.size());
  for (const WriterQueue& q : queues_) out.push_back(q.assigned);
  return out;
}

IngestReport Gateway::report() const {
  IngestReport r;
  {
    std::lock_guard lock(mutex_);
    r.offered = offered_;
    r.accepted = accepted_;
    r.rejected = rejected_;
    r.invalid = invalid_;
  }
  r.stored = stored_.load();
  r.write_failures = write_failures_.load();
  std::lock_guard lock(meter_mutex_);
  r.per_second = per_second_;
  if (meter_start_ != std::chrono::steady_clock::time_point{}) {
    const auto end = meter_stop_ == std::chrono::steady_clock::time_point{}
                         ? std::chrono::steady_clock::now()
                         : meter_stop_;
    r.duration_s = std::chrono::duration<double>(end - meter_start_).count();
  }
  return r;
}

std::size_t submit_with_retry(Gateway& gateway, std::vector<sim::SensorSample> batch) {
  std::size_t rejections = 0;
  for (;;) {
    const SubmitResult r = gateway.submit(std::move(batch));
    if (r.accepted()) return rejections;
    ++rejections;
    std::this_thread::sleep_for(r.retry_after);
  }
}

}  // namespace fleetmon::ingest

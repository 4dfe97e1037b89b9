// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file gateway.hpp
/// @brief Buffering reverse proxy in front of the store.
///
/// Producers hand over whole batches. A batch occupies one slot from the
/// moment it is accepted until its writer has stored every sample, so the
/// number of outstanding requests never exceeds `queue_capacity`. Accepted
/// batches are dealt to writers in strict rotation.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fleetmon/sim/fleet.hpp"
#include "fleetmon/tstore/store.hpp"

namespace fleetmon::ingest {

enum class OverloadPolicy { kRejectWithRetryAfter, kBlockProducer };

OverloadPolicy parse_overload_policy(std::string_view text);
std::string_view to_string(OverloadPolicy policy) noexcept;

inline constexpr std::size_t kDefaultQueueCapacity = 64;
inline constexpr std::size_t kDefaultBatchSize = 1000;

struct GatewayConfig {
  std::size_t queue_capacity{kDefaultQueueCapacity};  ///< batches
  std::size_t batch_size{kDefaultBatchSize};          ///< samples, producer hint
  std::size_t n_writers{1};
  OverloadPolicy overload_policy{OverloadPolicy::kRejectWithRetryAfter};

  void validate() const;
};

struct RecordError {
  std::size_t index{0};  ///< position in the submitted batch
  std::string message;
};

struct SubmitResult {
  enum class Status { kAccepted, kRejected };

  Status status{Status::kAccepted};
  std::chrono::milliseconds retry_after{0};  ///< set when rejected
  std::size_t accepted_samples{0};
  std::vector<RecordError> invalid;  ///< dropped records; never poison a batch

  bool accepted() const noexcept { return status == Status::kAccepted; }
};

struct IngestReport {
  std::vector<std::uint64_t> per_second;  ///< samples stored per metering second
  std::uint64_t offered{0};
  std::uint64_t accepted{0};
  std::uint64_t rejected{0};  ///< backpressure rejections plus invalid records
  std::uint64_t invalid{0};
  std::uint64_t stored{0};
  std::uint64_t write_failures{0};
  double duration_s{0.0};
};

class Gateway {
 public:
  Gateway(tstore::Store& store, GatewayConfig config);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Thread-safe. The batch is moved from only when accepted; a rejected
  /// batch is left intact for the caller to retry. Under kBlockProducer this
  /// waits for a free slot instead of rejecting. Throws UnavailableError after
  /// stop().
  SubmitResult submit(std::vector<sim::SensorSample>&& batch);

  /// Blocks until every accepted batch has been written.
  void drain();
  /// Drains, then joins the writers. Idempotent.
  void stop();

  /// Holds writers before their next batch (tests use this to stall the
  /// proxy); in-flight batches still finish.
  void pause();
  void resume();

  /// Starts the per-second stored-sample meter.
  void start_metering();
  /// Stops the meter, recording the final partial interval.
  void stop_metering();

  std::size_t occupancy() const;
  std::size_t max_occupancy() const noexcept { return max_occupancy_.load(); }
  /// Batches dealt to each writer so far.
  std::vector<std::uint64_t> writer_assignments() const;
  std::uint64_t stored_samples() const noexcept { return stored_.load(); }

  IngestReport report() const;
  const GatewayConfig& config() const noexcept { return config_; }

 private:
  struct WriterQueue {
    std::deque<std::vector<sim::SensorSample>> batches;
    std::uint64_t assigned{0};
  };

  void writer_loop(std::size_t index);
  void meter_loop(std::stop_token token, std::uint64_t baseline);
  std::chrono::milliseconds retry_hint() const;

  tstore::Store& store_;
  GatewayConfig config_;

  mutable std::mutex mutex_;
  std::condition_variable work_cv_;   // writers wait for batches / resume
  std::condition_variable space_cv_;  // producers and drain() wait for slots
  std::vector<WriterQueue> queues_;
  std::size_t next_writer_{0};
  std::size_t outstanding_{0};
  bool paused_{false};
  bool stopping_{false};
  bool stopped_{false};

  std::uint64_t offered_{0};
  std::uint64_t accepted_{0};
  std::uint64_t rejected_{0};
  std::uint64_t invalid_{0};
  std::atomic<std::uint64_t> stored_{0};
  std::atomic<std::uint64_t> write_failures_{0};
  std::atomic<std::size_t> max_occupancy_{0};
  std::atomic<std::int64_t> batch_write_ns_{0};  // EWMA for retry hints

  mutable std::mutex meter_mutex_;
  std::condition_variable_any meter_cv_;
  std::vector<std::uint64_t> per_second_;
  std::chrono::steady_clock::time_point meter_start_{};
  std::chrono::steady_clock::time_point meter_stop_{};
  std::jthread meter_;

  std::vector<std::thread> writers_;
};

/// Resubmits until accepted, sleeping for each retry hint. Returns the
/// number of rejections seen.
std::size_t submit_with_retry(Gateway& gateway, std::vector<sim::SensorSample> batch);

}  // namespace fleetmon::ingest

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file pipeline.hpp
/// @brief Store-backed training and scoring over whole units.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fleetmon/detect/evaluate.hpp"
#include "fleetmon/detect/flags.hpp"
#include "fleetmon/detect/model.hpp"
#include "fleetmon/detect/model_cache.hpp"
#include "fleetmon/error.hpp"
#include "fleetmon/tstore/store.hpp"

namespace fleetmon::detect {

/// Units that have at least one sensor series, ascending.
std::vector<std::uint32_t> list_units(const tstore::Store& store);

/// Every sensor of `unit_id` over [start_ms, end_ms], sensors ascending by id.
/// Throws NotFoundError for an unknown unit, InsufficientDataError when the
/// range is empty and ValidationError when sensors disagree on timestamps.
TrainingWindow load_unit_window(const tstore::Store& store, std::uint32_t unit_id,
                                std::int64_t start_ms, std::int64_t end_ms);

struct TrainOptions {
  std::vector<std::uint32_t> units;  ///< empty: every unit in the store
  std::int64_t start_ms{0};
  std::int64_t end_ms{INT64_MAX};
  RankRule rank;
  unsigned n_threads{1};
};

struct TrainOutcome {
  std::uint32_t unit_id{0};
  std::optional<ErrorCode> error;  ///< nullopt on success
  std::string message;
  std::size_t rank{0};
};

/// Trains and caches one model per unit. A failing unit is reported in its
/// outcome and does not affect the others. Outcomes are ordered by unit.
std::vector<TrainOutcome> train_fleet(const tstore::Store& store, const TrainOptions& options,
                                      const ModelCache& cache);

struct ScoreOptions {
  std::int64_t start_ms{0};
  std::int64_t end_ms{INT64_MAX};
  std::size_t window_length{kDefaultWindowLength};
  unsigned n_threads{1};
};

/// Cuts each unit's data into consecutive non-overlapping windows of
/// `window_length` rows (a short tail is dropped) and scores them. Result is
/// ordered by (window end, unit).
std::vector<ScoredWindow> score_store(const tstore::Store& store,
                                      const std::vector<UnitModel>& models,
                                      const ScoreOptions& options);

/// Applies the rejection rule to each window and persists the flags.
std::vector<AnomalyFlag> flag_windows(tstore::Store& store,
                                      const std::vector<ScoredWindow>& windows,
                                      const MultipleTestConfig& config);

}  // namespace fleetmon::detect

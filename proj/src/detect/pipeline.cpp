// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/detect/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "fleetmon/sim/records.hpp"

namespace fleetmon::detect {

namespace {

// Runs fn(i) for i in [0, n) on up to n_threads threads.
template <typename Fn>
void parallel_for(std::size_t n, unsigned n_threads, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(n_threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        try {
          for (std::size_t i = next++; i < n; i = next++) fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next = n;
        }
      });
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

std::vector<std::uint32_t> list_units(const tstore::Store& store) {
  std::set<std::uint32_t> units;
  for (const auto& tags : store.list_series(sim::kEnergyMetric))
    units.insert(tstore::tag_as_uint(tags, "unit"));
  return {units.begin(), units.end()};
}

TrainingWindow load_unit_window(const tstore::Store& store, std::uint32_t unit_id,
                                std::int64_t start_ms, std::int64_t end_ms) {
  tstore::QueryRange range{std::string(sim::kEnergyMetric),
                           {{"unit", std::to_string(unit_id)}},
                           start_ms,
                           end_ms};
  auto series = store.query(range);
  if (series.empty()) {
    bool known = false;
    for (const auto& tags : store.list_series(sim::kEnergyMetric))
      known = known || tstore::tag_as_uint(tags, "unit") == unit_id;
    if (!known) throw NotFoundError("unknown unit " + std::to_string(unit_id));
    throw InsufficientDataError("unit " + std::to_string(unit_id) + " has no data in range");
  }
  std::vector<std::pair<std::uint32_t, const tstore::SeriesResult*>> by_sensor;
  for (const auto& s : series) by_sensor.emplace_back(tstore::tag_as_uint(s.tags, "sensor"), &s);
  std::sort(by_sensor.begin(), by_sensor.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  TrainingWindow w;
  w.unit_id = unit_id;
  const auto& first = by_sensor.front().second->points;
  const auto rows = static_cast<Eigen::Index>(first.size());
  w.values.resize(rows, static_cast<Eigen::Index>(by_sensor.size()));
  w.timestamps.reserve(first.size());
  for (const auto& pt : first) w.timestamps.push_back(pt.timestamp_ms);
  for (std::size_t j = 0; j < by_sensor.size(); ++j) {
    const auto& [sensor, s] = by_sensor[j];
    w.sensor_ids.push_back(sensor);
    const auto& pts = s->points;
    bool aligned = pts.size() == first.size();
    for (std::size_t k = 0; aligned && k < pts.size(); ++k)
      aligned = pts[k].timestamp_ms == w.timestamps[k];
    if (!aligned)
      throw ValidationError("unit " + std::to_string(unit_id) + " sensor " +
                            std::to_string(sensor) +
                            " has missing or extra timesteps in the requested range");
    for (std::size_t k = 0; k < pts.size(); ++k)
      w.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = pts[k].value;
  }
  return w;
}

std::vector<TrainOutcome> train_fleet(const tstore::Store& store, const TrainOptions& options,
                                      const ModelCache& cache) {
  std::vector<std::uint32_t> units = options.units.empty() ? list_units(store) : options.units;
  std::sort(units.begin(), units.end());
  units.erase(std::unique(units.begin(), units.end()), units.end());
  std::vector<TrainOutcome> outcomes(units.size());
  parallel_for(units.size(), options.n_threads, [&](std::size_t i) {
    TrainOutcome& out = outcomes[i];
    out.unit_id = units[i];
    try {
      const TrainingWindow w = load_unit_window(store, units[i], options.start_ms, options.end_ms);
      const UnitModel model = estimate_model(w, options.rank);
      cache.store(model);
      out.rank = model.rank();
    } catch (const Error& e) {
      out.error = e.code();
      out.message = e.what();
    } catch (const std::exception& e) {
      out.error = ErrorCode::kIo;
      out.message = e.what();
    }
  });
  return outcomes;
}

std::vector<ScoredWindow> score_store(const tstore::Store& store,
                                      const std::vector<UnitModel>& models,
                                      const ScoreOptions& options) {
  if (options.window_length < 1) throw ConfigError("window length must be at least 1");
  std::vector<std::vector<ScoredWindow>> per_unit(models.size());
  parallel_for(models.size(), options.n_threads, [&](std::size_t u) {
    const UnitModel& model = models[u];
    const TrainingWindow data =
        load_unit_window(store, model.unit_id, options.start_ms, options.end_ms);
    if (data.sensor_ids != model.sensor_ids)
      throw AlignmentError("stored sensors of unit " + std::to_string(model.unit_id) +
                           " do not match its model");
    const WindowScorer scorer(model);
    const auto w = static_cast<Eigen::Index>(options.window_length);
    for (Eigen::Index start = 0; start + w <= data.values.rows(); start += w) {
      ScoreWindow window{model.unit_id, data.values.middleRows(start, w),
                         data.timestamps[static_cast<std::size_t>(start + w - 1)]};
      per_unit[u].push_back({scorer.score(window), model.sensor_ids});
    }
  });
  std::vector<ScoredWindow> out;
  for (auto& v : per_unit)
    for (auto& w : v) out.push_back(std::move(w));
  std::stable_sort(out.begin(), out.end(), [](const ScoredWindow& a, const ScoredWindow& b) {
    return std::tie(a.scores.window_end_ms, a.scores.unit_id) <
           std::tie(b.scores.window_end_ms, b.scores.unit_id);
  });
  return out;
}

std::vector<AnomalyFlag> flag_windows(tstore::Store& store,
                                      const std::vector<ScoredWindow>& windows,
                                      const MultipleTestConfig& config) {
  std::vector<AnomalyFlag> out;
  for (const ScoredWindow& w : windows) {
    const auto rejected = reject(w.scores.p, config);
    auto flags = flag_anomalies(store, w.scores, rejected, w.sensor_ids, config.method);
    out.insert(out.end(), flags.begin(), flags.end());
  }
  return out;
}

}  // namespace fleetmon::detect

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/detect/evaluate.hpp"

#include <algorithm>
#include <ostream>

#include "fleetmon/error.hpp"

namespace fleetmon::detect {

EvaluationMetrics evaluate_detector(std::span<const ScoredWindow> windows,
                                    const sim::FleetGenerator& truth,
                                    const MultipleTestConfig& config) {
  config.validate();
  EvaluationMetrics m;
  m.method = config.method;
  m.level = config.level;
  double fdp_sum = 0.0;
  std::vector<char> anomalous;
  for (const ScoredWindow& w : windows) {
    const auto& p = w.scores.p;
    if (w.sensor_ids.size() != p.size())
      throw AlignmentError("scored window sensor ids do not match its p-vector");
    anomalous.assign(p.size(), 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      anomalous[i] = truth.is_anomalous(w.scores.unit_id, w.sensor_ids[i],
                                        w.scores.window_end_ms) ? 1 : 0;
      m.true_anomalies += static_cast<std::uint64_t>(anomalous[i]);
    }
    const std::vector<std::size_t> rejected = reject(p, config);
    std::uint64_t v = 0;
    for (std::size_t i : rejected) v += anomalous[i] ? 0 : 1;
    const auto r = static_cast<std::uint64_t>(rejected.size());
    m.false_rejections += v;
    m.rejections += r;
    m.true_rejections += r - v;
    fdp_sum += static_cast<double>(v) / static_cast<double>(std::max<std::uint64_t>(r, 1));
    ++m.windows;
  }
  m.fdp = m.windows ? fdp_sum / static_cast<double>(m.windows) : 0.0;
  m.pooled_fdp = static_cast<double>(m.false_rejections) /
                 static_cast<double>(std::max<std::uint64_t>(m.rejections, 1));
  if (m.true_anomalies > 0)
    m.power = static_cast<double>(m.true_rejections) / static_cast<double>(m.true_anomalies);
  return m;
}

void write_evaluation_csv(std::ostream& out, std::span<const EvaluationMetrics> rows) {
  out << "method,level,windows,V,R,FDP,power\n";
  for (const EvaluationMetrics& m : rows) {
    out << to_string(m.method) << ',' << m.level << ',' << m.windows << ','
        << m.false_rejections << ',' << m.rejections << ',' << m.fdp << ',';
    if (m.power)
      out << *m.power;
    else
      out << "NA";
    out << '\n';
  }
}

}  // namespace fleetmon::detect

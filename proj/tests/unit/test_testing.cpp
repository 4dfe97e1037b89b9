// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

// Window scoring, rejection rules, flags and evaluation.

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fleetmon/detect/evaluate.hpp"
#include "fleetmon/detect/flags.hpp"
#include "fleetmon/detect/model.hpp"
#include "fleetmon/detect/multiple_testing.hpp"
#include "fleetmon/detect/score.hpp"
#include "fleetmon/error.hpp"
#include "fleet_matrix.hpp"
#include "oracles.hpp"

namespace fleetmon::detect {
namespace {

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

UnitModel identity_model(std::size_t n, std::uint64_t n_train = 1'000'000) {
  UnitModel m;
  m.sensor_ids.resize(n);
  std::iota(m.sensor_ids.begin(), m.sensor_ids.end(), 0u);
  m.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  m.eigenvectors = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), 1);
  m.eigenvalues = Eigen::VectorXd::Constant(1, 1.0);
  m.residual_variance = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0);
  m.residual_variance(0) = 1e-6;
  m.training_sample_count = n_train;
  return m;
}

// ---- p-values -------------------------------------------------------------

TEST(PValue, MatchesErfSeriesOracle) {
  EXPECT_NEAR(two_sided_p_value(1.96), 0.05, 0.0005);
  for (double z : {0.0, 0.3, 1.0, 1.645, 1.96, 2.5, 3.0, 4.0, 5.0})
    EXPECT_NEAR(two_sided_p_value(z), testing::two_sided_p_oracle(z), 1e-12) << z;
  EXPECT_DOUBLE_EQ(two_sided_p_value(-1.3), two_sided_p_value(1.3));
  EXPECT_DOUBLE_EQ(two_sided_p_value(0.0), 1.0);
  EXPECT_EQ(two_sided_p_value(60.0), kPValueFloor);
  EXPECT_EQ(two_sided_p_value(std::nan("")), kPValueFloor);
}

TEST(Score, ZeroDeviationGivesPOne) {
  const auto model = identity_model(4);
  ScoreWindow w{0, Eigen::MatrixXd::Zero(60, 4), 59'000};
  const auto p = score_window(model, w);
  ASSERT_EQ(p.p.size(), 4u);
  for (double v : p.p) EXPECT_DOUBLE_EQ(v, 1.0);
  EXPECT_EQ(p.window_end_ms, 59'000);
  EXPECT_EQ(p.component_scores.size(), 1);
}

TEST(Score, StandardErrorUsesWindowAndTrainingSize) {
  auto model = identity_model(2, 100);
  model.residual_variance(0) = 3.0;  // sensor 0 variance 1 + 3 = 4
  ScoreWindow w{0, Eigen::MatrixXd::Constant(25, 2, 0.5), 0};
  const auto p = score_window(model, w);
  const double se0 = 2.0 * std::sqrt(1.0 / 25 + 1.0 / 100);
  const double se1 = 1.0 * std::sqrt(1.0 / 25 + 1.0 / 100);
  EXPECT_NEAR(p.z[0], 0.5 / se0, 1e-12);
  EXPECT_NEAR(p.z[1], 0.5 / se1, 1e-12);
  EXPECT_NEAR(p.p[1], testing::two_sided_p_oracle(0.5 / se1), 1e-12);
}

TEST(Score, ComponentScoresAreProjectedMeans) {
  const auto model = identity_model(3);
  Eigen::MatrixXd x(2, 3);
  x << 1, 2, 3, 3, 4, 5;
  const auto p = score_window(model, {0, x, 0});
  EXPECT_NEAR(p.component_scores(0), 2.0, 1e-12);
}

TEST(Score, AlignmentErrors) {
  const auto model = identity_model(3);
  EXPECT_THROW(score_window(model, {0, Eigen::MatrixXd::Zero(5, 4), 0}), AlignmentError);
  EXPECT_THROW(score_window(model, {0, Eigen::MatrixXd::Zero(0, 3), 0}), AlignmentError);
}

TEST(Score, NullWindowsGiveUniformPValues) {
  // 100 sensors, 20,000 training rows, 100 windows of 60 -> 10,000 p-values.
  sim::FleetConfig cfg;
  cfg.n_units = 1;
  cfg.n_sensors_per_unit = 100;
  cfg.duration_s = 20'000 + 100 * 60;
  cfg.seed = 2024;
  const sim::FleetGenerator gen(cfg);
  TrainingWindow tw;
  tw.values = testing::unit_matrix(gen, 0, 0, 20'000);
  for (int t = 0; t < 20'000; ++t) tw.timestamps.push_back(t * 1000);
  for (std::uint32_t s = 0; s < 100; ++s) tw.sensor_ids.push_back(s);
  const auto model = estimate_model(tw);
  const WindowScorer scorer(model);
  std::vector<double> pvals;
  for (int k = 0; k < 100; ++k) {
    const auto x = testing::unit_matrix(gen, 0, 20'000 + k * 60, 60);
    const auto p = scorer.score({0, x, 0});
    pvals.insert(pvals.end(), p.p.begin(), p.p.end());
  }
  ASSERT_EQ(pvals.size(), 10'000u);
  for (double v : pvals) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_LT(testing::ks_uniform_statistic(pvals), testing::ks_critical_1pct(pvals.size()));
}

// ---- rejection rules ------------------------------------------------------

TEST(Fwer, ClosedForm) {
  EXPECT_NEAR(fwer_any_alarm_prob(0.05, 1), 0.05, 1e-15);
  EXPECT_NEAR(fwer_any_alarm_prob(0.05, 10), 0.40126, 1e-4);
  EXPECT_EQ(fwer_any_alarm_prob(0.3, 0), 0.0);
  EXPECT_EQ(fwer_any_alarm_prob(0.0, 1000), 0.0);
  EXPECT_NEAR(fwer_any_alarm_prob(1e-12, 1000), 1e-9, 1e-15);
}

TEST(Bonferroni, Examples) {
  const std::vector<double> p{0.004, 0.030};
  EXPECT_EQ(reject_bonferroni(p, 0.05), (std::vector<std::size_t>{0}));
  EXPECT_TRUE(reject_bonferroni({}, 0.05).empty());
  EXPECT_EQ(reject_bonferroni(std::vector<double>(5, 0.0), 0.05).size(), 5u);
  EXPECT_EQ(reject_uncorrected(p, 0.05), (std::vector<std::size_t>{0, 1}));
}

TEST(Fdr, BhExamples) {
  const MultipleTestConfig bh{Method::kBH1995, 0.05};
  EXPECT_EQ(reject_fdr(std::vector<double>{0.01, 0.02, 0.03, 0.04}, bh),
            (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(reject_fdr(std::vector<double>{0.01, 0.04, 0.20, 0.50}, bh), (std::vector<std::size_t>{0}));
  EXPECT_TRUE(reject_fdr(std::vector<double>{}, bh).empty());
}

TEST(Fdr, ByExampleFollowsThresholdArithmetic) {
  const std::vector<double> p{0.01, 0.02, 0.03, 0.04};
  const double c4 = 25.0 / 12.0;
  EXPECT_NEAR(harmonic_number(4), c4, 1e-15);
  // k = 1 threshold is 0.05 / (4 c(4)) = 0.006, below p(1) = 0.01; no larger
  // k passes either, so nothing is rejected.
  EXPECT_GT(0.01, 1 * 0.05 / (4 * c4));
  const auto got = reject_fdr(p, {Method::kBY2001, 0.05});
  EXPECT_EQ(as_set(got), testing::step_up_oracle(p, 0.05, true));
  EXPECT_TRUE(got.empty());
  // At q = 0.1 the k = 4 threshold is 0.4 / (4 c(4)) = 0.048 >= p(4).
  EXPECT_EQ(reject_fdr(p, {Method::kBY2001, 0.10}), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(as_set(reject_fdr(p, {Method::kBY2001, 0.10})), testing::step_up_oracle(p, 0.10, true));
}

TEST(Fdr, MatchesBruteForceStepUpOnGrid) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 3'000; ++trial) {
    const std::size_t m = 1 + rng() % 12;
    std::vector<double> p(m);
    for (double& v : p) v = static_cast<double>(rng() % 101) / 100.0;
    for (double q : {0.05, 0.1, 0.2}) {
      EXPECT_EQ(as_set(reject_fdr(p, {Method::kBH1995, q})), testing::step_up_oracle(p, q, false));
      EXPECT_EQ(as_set(reject_fdr(p, {Method::kBY2001, q})), testing::step_up_oracle(p, q, true));
      EXPECT_EQ(as_set(reject_bonferroni(p, q)), testing::bonferroni_oracle(p, q));
    }
  }
}

TEST(Fdr, BonferroniAndByNestInsideBh) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  for (int trial = 0; trial < 2'000; ++trial) {
    std::vector<double> p(1 + rng() % 30);
    for (double& v : p) v = u(rng);
    const auto bh = as_set(reject_fdr(p, {Method::kBH1995, 0.05}));
    const auto by = as_set(reject_fdr(p, {Method::kBY2001, 0.05}));
    const auto bonf = as_set(reject_bonferroni(p, 0.05));
    EXPECT_TRUE(std::includes(bh.begin(), bh.end(), bonf.begin(), bonf.end()));
    EXPECT_TRUE(std::includes(bh.begin(), bh.end(), by.begin(), by.end()));
  }
}

TEST(Fdr, BonferroniNeedNotNestInsideBy) {
  // BY's first threshold q / (m c(m)) is below Bonferroni's q / m, so a lone
  // small p-value can clear Bonferroni and miss BY.
  const std::vector<double> p{0.02, 0.05};
  EXPECT_EQ(reject_bonferroni(p, 0.05), (std::vector<std::size_t>{0}));
  EXPECT_TRUE(reject_fdr(p, {Method::kBY2001, 0.05}).empty());
}

TEST(Fdr, BhMonotoneInQ) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> p(1 + rng() % 40);
    for (double& v : p) v = u(rng);
    std::set<std::size_t> prev;
    for (double q = 0.01; q < 0.5; q += 0.01) {
      const auto cur = as_set(reject_fdr(p, {Method::kBH1995, q}));
      EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      prev = cur;
    }
  }
}

TEST(Fdr, PermutationEquivariant) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 2 + rng() % 20;
    std::vector<double> p(m);
    for (double& v : p) v = u(rng);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> permuted(m);
    for (std::size_t i = 0; i < m; ++i) permuted[i] = p[perm[i]];
    for (Method method : {Method::kBH1995, Method::kBY2001, Method::kBonferroni, Method::kUncorrected}) {
      const auto base = as_set(reject(p, {method, 0.05}));
      std::set<std::size_t> mapped;
      for (std::size_t i : reject(permuted, {method, 0.05})) mapped.insert(perm[i]);
      EXPECT_EQ(mapped, base);
    }
  }
}

TEST(Fdr, TiesAreRejectedTogether) {
  const std::vector<double> p{0.03, 0.01, 0.03, 0.03};
  EXPECT_EQ(reject_fdr(p, {Method::kBH1995, 0.05}).size(), 4u);
  EXPECT_EQ(sorted_ranks(p), (std::vector<std::size_t>{2, 1, 3, 4}));
}

TEST(MultipleTest, ConfigAndParsing) {
  EXPECT_THROW((MultipleTestConfig{Method::kBH1995, 0.0}.validate()), ConfigError);
  EXPECT_THROW((MultipleTestConfig{Method::kBH1995, 1.0}.validate()), ConfigError);
  EXPECT_EQ(parse_method("by"), Method::kBY2001);
  EXPECT_EQ(to_string(Method::kBonferroni), "bonferroni");
  EXPECT_THROW(parse_method("holm"), ConfigError);
}

// ---- flags -----------------------------------------------------------------

PValueVector pv(std::uint32_t unit, std::int64_t end_ms, std::vector<double> p) {
  PValueVector v;
  v.unit_id = unit;
  v.window_end_ms = end_ms;
  v.z.assign(p.size(), 0.0);
  v.p = std::move(p);
  return v;
}

TEST(Flags, RankAndThresholdInvariant) {
  const auto p = pv(2, 59'000, {0.5, 0.001, 0.02, 0.0001});
  const std::vector<std::uint32_t> sensors{10, 11, 12, 13};
  const MultipleTestConfig cfg{Method::kBH1995, 0.05};
  const auto rej = reject(p.p, cfg);
  const auto flags = make_flags(p, rej, sensors, cfg.method);
  ASSERT_EQ(flags.size(), 3u);
  for (const auto& f : flags) {
    EXPECT_EQ(f.unit_id, 2u);
    EXPECT_EQ(f.timestamp_ms, 59'000);
    EXPECT_LE(f.p_value, static_cast<double>(f.rank) * 0.05 / 4.0);
  }
  EXPECT_EQ(flags[0].sensor_id, 11u);
  EXPECT_EQ(flags[0].rank, 2u);
}

TEST(Flags, EmptyRejectionWritesNothing) {
  tstore::Store store;
  flag_anomalies(store, pv(0, 0, {0.9, 0.8}), {}, std::vector<std::uint32_t>{0, 1}, Method::kBH1995);
  for (const auto& s : store.shard_stats()) EXPECT_EQ(s.write_counter, 0u);
  EXPECT_TRUE(query_flags(store, {}).empty());
}

TEST(Flags, RewritingAWindowIsIdempotent) {
  tstore::Store store;
  const auto p = pv(1, 119'000, {0.0001, 0.3, 0.00002});
  const std::vector<std::uint32_t> sensors{0, 1, 2};
  const std::vector<std::size_t> rej{0, 2};
  flag_anomalies(store, p, rej, sensors, Method::kBH1995);
  const auto first = store.query({std::string(kAnomalyMetric), {}, 0, INT64_MAX / 2});
  const auto flags1 = query_flags(store, {});
  flag_anomalies(store, p, rej, sensors, Method::kBH1995);
  EXPECT_EQ(store.query({std::string(kAnomalyMetric), {}, 0, INT64_MAX / 2}), first);
  EXPECT_EQ(query_flags(store, {}), flags1);
  ASSERT_EQ(flags1.size(), 2u);
  EXPECT_EQ(flags1[0].sensor_id, 0u);
  EXPECT_EQ(flags1[1].rank, 1u);
}

TEST(Flags, QueryableThroughStoreMachinery) {
  tstore::Store store;
  flag_anomalies(store, pv(3, 60'000, {0.001}), std::vector<std::size_t>{0},
                 std::vector<std::uint32_t>{7}, Method::kBonferroni);
  flag_anomalies(store, pv(3, 60'000, {0.001}), std::vector<std::size_t>{0},
                 std::vector<std::uint32_t>{7}, Method::kBH1995);
  const auto raw = store.query({std::string(kAnomalyMetric),
                                {{"unit", "3"}, {"sensor", "7"}, {"method", "bonferroni"}},
                                0,
                                100'000});
  ASSERT_EQ(raw.size(), 1u);
  EXPECT_DOUBLE_EQ(raw[0].points[0].value, 0.001);
  FlagQuery q;
  q.method = Method::kBH1995;
  EXPECT_EQ(query_flags(store, q).size(), 1u);
  q = {};
  q.sensor_id = 8;
  EXPECT_TRUE(query_flags(store, q).empty());
  EXPECT_EQ(query_flags(store, {}).size(), 2u);
}

// ---- evaluation ------------------------------------------------------------

TEST(Evaluate, NoAnomaliesNoRejectionsGivesNaPower) {
  sim::FleetConfig cfg;
  cfg.n_sensors_per_unit = 3;
  const sim::FleetGenerator gen(cfg);
  std::vector<ScoredWindow> w{{pv(0, 59'000, {0.9, 0.5, 0.7}), {0, 1, 2}}};
  const auto m = evaluate_detector(w, gen, {Method::kBH1995, 0.05});
  EXPECT_EQ(m.rejections, 0u);
  EXPECT_EQ(m.fdp, 0.0);
  EXPECT_FALSE(m.power.has_value());
  std::ostringstream csv;
  write_evaluation_csv(csv, std::vector{m});
  EXPECT_EQ(csv.str(), "method,level,windows,V,R,FDP,power\nbh,0.05,1,0,0,0,NA\n");
}

TEST(Evaluate, TrueRejectionsOnlyMeansZeroFdp) {
  sim::FleetConfig cfg;
  cfg.n_sensors_per_unit = 4;
  cfg.duration_s = 200;
  cfg.fault_specs.push_back(sim::FaultProfile::sharp_shift(0, {1, 2}, 60.0, 3.0));
  const sim::FleetGenerator gen(cfg);
  std::vector<ScoredWindow> w{{pv(0, 59'000, {0.5, 0.5, 0.5, 0.5}), {0, 1, 2, 3}},
                              {pv(0, 119'000, {0.5, 1e-9, 1e-9, 0.5}), {0, 1, 2, 3}}};
  const auto m = evaluate_detector(w, gen, {Method::kBH1995, 0.05});
  EXPECT_EQ(m.rejections, 2u);
  EXPECT_EQ(m.false_rejections, 0u);
  EXPECT_EQ(m.fdp, 0.0);
  EXPECT_EQ(m.true_anomalies, 2u);
  ASSERT_TRUE(m.power.has_value());
  EXPECT_DOUBLE_EQ(*m.power, 1.0);
}

TEST(Evaluate, FdpAveragesPerWindow) {
  sim::FleetConfig cfg;
  cfg.n_sensors_per_unit = 2;
  cfg.duration_s = 200;
  cfg.fault_specs.push_back(sim::FaultProfile::sharp_shift(0, {0}, 0.0, 3.0));
  const sim::FleetGenerator gen(cfg);
  // Window 1: one true, one false rejection (FDP 1/2). Window 2: one false
  // rejection only (FDP 1). Mean 0.75, pooled 2/3.
  std::vector<ScoredWindow> w{{pv(0, 59'000, {1e-9, 1e-9}), {0, 1}},
                              {pv(0, 119'000, {0.9, 1e-9}), {0, 1}}};
  const auto m = evaluate_detector(w, gen, {Method::kUncorrected, 0.05});
  EXPECT_EQ(m.false_rejections, 2u);
  EXPECT_EQ(m.rejections, 3u);
  EXPECT_DOUBLE_EQ(m.fdp, 0.75);
  EXPECT_DOUBLE_EQ(m.pooled_fdp, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*m.power, 0.5);
  EXPECT_LE(m.false_rejections, m.rejections);
}

}  // namespace
}  // namespace fleetmon::detect

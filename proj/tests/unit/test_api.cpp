// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "fleetmon/api/http.hpp"
#include "fleetmon/api/json.hpp"
#include "fleetmon/api/service.hpp"
#include "fleetmon/detect/pipeline.hpp"
#include "fleetmon/error.hpp"
#include "oracles.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that clashes with it.
#include <httplib.h>

namespace fleetmon::api {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Three units, six sensors, 20 minutes at 1 Hz. Unit 2 shifts on every
// sensor and unit 1 on a single sensor, both at 900 s; models are trained on
// the first 10 minutes and the last 10 are scored with BH at q = 0.05.
sim::FleetConfig fixture_fleet() {
  sim::FleetConfig c;
  c.n_units = 3;
  c.n_sensors_per_unit = 6;
  c.duration_s = 1'200;
  c.seed = 7;
  c.fault_specs.push_back(sim::FaultProfile::sharp_shift(2, {0, 1, 2, 3, 4, 5}, 900.0, 3.0));
  c.fault_specs.push_back(sim::FaultProfile::sharp_shift(1, {1}, 900.0, 3.0));
  return c;
}

class ApiTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cache_dir_ = fs::temp_directory_path() / "fleetmon-api-models";
    fs::remove_all(cache_dir_);
    store_ = new tstore::Store();
    cache_ = new detect::ModelCache(cache_dir_);
    for (const auto& s : sim::generate_fleet(fixture_fleet())) store_->put(s);
    detect::TrainOptions topts;
    topts.end_ms = 599'999;
    detect::train_fleet(*store_, topts, *cache_);
    std::vector<detect::UnitModel> models;
    for (std::uint32_t u : cache_->units()) models.push_back(cache_->load(u));
    detect::ScoreOptions sopts;
    sopts.start_ms = 600'000;
    const auto windows = detect::score_store(*store_, models, sopts);
    detect::flag_windows(*store_, windows, {detect::Method::kBH1995, 0.05});
  }
  static void TearDownTestSuite() {
    delete cache_;
    delete store_;
    fs::remove_all(cache_dir_);
  }

  static inline tstore::Store* store_ = nullptr;
  static inline detect::ModelCache* cache_ = nullptr;
  static inline fs::path cache_dir_;
};

std::vector<detect::AnomalyFlag> all_flags(const tstore::Store& store) {
  return detect::query_flags(store, {});
}

// ---- status rules ----------------------------------------------------------

TEST(Classify, ThresholdTable) {
  const ServiceConfig cfg;
  EXPECT_EQ(classify(0, cfg), HealthStatus::kHealthy);
  EXPECT_EQ(classify(1, cfg), HealthStatus::kWarning);
  EXPECT_EQ(classify(4, cfg), HealthStatus::kWarning);
  EXPECT_EQ(classify(5, cfg), HealthStatus::kCritical);
  EXPECT_EQ(classify(500, cfg), HealthStatus::kCritical);
  ServiceConfig bad;
  bad.warning_sensors = 6;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Service, NoFlagsMeansAllHealthy) {
  tstore::Store store;
  for (std::uint32_t u = 0; u < 3; ++u) store.put({u, 0, 1000, 1.0});
  const AnalyticsService svc(store, nullptr);
  const auto sum = svc.fleet_summary();
  ASSERT_EQ(sum.units.size(), 3u);
  for (const auto& u : sum.units) {
    EXPECT_EQ(u.status, HealthStatus::kHealthy);
    EXPECT_FALSE(u.last_anomaly_timestamp.has_value());
  }
}

TEST(Service, FlagsOutsideTrailingPeriodAreHealthy) {
  tstore::Store store;
  for (std::int64_t t = 0; t <= 2'000; ++t) store.put({0, 0, t * 1000, 0.0});
  detect::PValueVector p;
  p.unit_id = 0;
  p.window_end_ms = 100'000;
  p.p = {1e-9};
  detect::flag_anomalies(store, p, std::vector<std::size_t>{0}, std::vector<std::uint32_t>{0},
                         detect::Method::kBH1995);
  const AnalyticsService svc(store, nullptr);
  const auto sum = svc.fleet_summary();
  ASSERT_EQ(sum.units.size(), 1u);
  EXPECT_EQ(sum.units[0].status, HealthStatus::kHealthy);
  EXPECT_EQ(sum.units[0].active_anomaly_count, 0u);
  EXPECT_EQ(sum.units[0].last_anomaly_timestamp, 100'000);
  EXPECT_EQ(sum.window_end_ms, 2'000'000);
  EXPECT_EQ(sum.window_start_ms, 2'000'000 - 600'000);
}

TEST_F(ApiTest, FixtureStatusesMatchThresholdRules) {
  const AnalyticsService svc(*store_, cache_);
  const auto sum = svc.fleet_summary();
  ASSERT_EQ(sum.units.size(), 3u);
  // Recompute from the raw flags: distinct flagged sensors in the trailing
  // period (end - 10 windows, end].
  const std::int64_t end = 1'199'000;
  std::map<std::uint32_t, std::set<std::uint32_t>> sensors;
  std::map<std::uint32_t, std::size_t> counts;
  for (const auto& f : all_flags(*store_))
    if (f.timestamp_ms > end - 600'000 && f.timestamp_ms <= end) {
      sensors[f.unit_id].insert(f.sensor_id);
      ++counts[f.unit_id];
    }
  auto expected_status = [&](std::uint32_t u) {
    const auto n = sensors[u].size();
    return n >= 5 ? HealthStatus::kCritical : n >= 1 ? HealthStatus::kWarning : HealthStatus::kHealthy;
  };
  for (const auto& u : sum.units) {
    EXPECT_EQ(u.status, expected_status(u.unit_id)) << u.unit_id;
    EXPECT_EQ(u.active_anomaly_count, counts[u.unit_id]);
    EXPECT_EQ(u.flagged_sensors, sensors[u.unit_id].size());
  }
  EXPECT_EQ(sum.units[0].unit_id, 2u);
  EXPECT_EQ(sum.units[0].status, HealthStatus::kCritical);
  for (std::size_t i = 1; i < sum.units.size(); ++i)
    EXPECT_GE(static_cast<int>(sum.units[i - 1].status), static_cast<int>(sum.units[i].status));
}

// ---- downsampling ----------------------------------------------------------

std::vector<tstore::SeriesPoint> wiggle(std::size_t n) {
  std::vector<tstore::SeriesPoint> pts;
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back({static_cast<std::int64_t>(i) * 1000, std::sin(0.37 * static_cast<double>(i)) * (1 + i % 7)});
  return pts;
}

TEST(Downsample, ShortInputUnchanged) {
  const auto pts = wiggle(40);
  EXPECT_EQ(downsample_min_max(pts, 40), pts);
  EXPECT_EQ(downsample_min_max(pts, 500), pts);
  EXPECT_THROW(downsample_min_max(pts, 1), ValidationError);
}

TEST(Downsample, KeepsBudgetOrderAndExtremes) {
  const auto pts = wiggle(10'001);
  for (std::size_t budget : {2u, 3u, 10u, 99u, 500u}) {
    const auto out = downsample_min_max(pts, budget);
    EXPECT_LE(out.size(), budget);
    for (std::size_t i = 1; i < out.size(); ++i) EXPECT_LT(out[i - 1].timestamp_ms, out[i].timestamp_ms);
    const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(),
                                              [](auto& a, auto& b) { return a.value < b.value; });
    EXPECT_NE(std::find(out.begin(), out.end(), *lo), out.end());
    EXPECT_NE(std::find(out.begin(), out.end(), *hi), out.end());
    // Each output point is a real input point.
    for (const auto& p : out) EXPECT_NE(std::find(pts.begin(), pts.end(), p), pts.end());
  }
}

// ---- sparklines, drilldown, feed ---------------------------------------------

TEST_F(ApiTest, SparklineMarkersEqualDirectStoreQuery) {
  const AnalyticsService svc(*store_, cache_);
  const auto view = svc.unit_sensors(2, 0, 1'199'000, 50);
  ASSERT_EQ(view.sensors.size(), 6u);
  for (const auto& s : view.sensors) {
    EXPECT_EQ(s.raw_count, 1'200u);
    EXPECT_LE(s.points.size(), 50u);
    // Cross-query: read the anomaly metric straight from the store.
    const auto raw = store_->query({std::string(detect::kAnomalyMetric),
                                    {{"unit", "2"}, {"sensor", std::to_string(s.sensor_id)}},
                                    0,
                                    1'199'000});
    std::multiset<std::pair<std::int64_t, double>> direct, shown;
    for (const auto& r : raw)
      for (const auto& p : r.points) direct.insert({p.timestamp_ms, p.value});
    for (const auto& m : s.markers) shown.insert({m.timestamp_ms, m.p_value});
    EXPECT_EQ(shown, direct) << s.sensor_id;
    EXPECT_FALSE(s.markers.empty());
  }
  EXPECT_THROW(svc.unit_sensors(9, 0, 10, 50), NotFoundError);
  EXPECT_THROW(svc.unit_sensors(2, 0, 10, 1), ValidationError);
}

TEST_F(ApiTest, EnvelopeCoversNullSamples) {
  const AnalyticsService svc(*store_, cache_);
  std::size_t inside = 0;
  std::size_t total = 0;
  for (std::uint32_t s = 0; s < 6; ++s) {
    const auto d = svc.drilldown(0, s, 600'000, 600'000);
    ASSERT_TRUE(d.envelope.has_value());
    EXPECT_DOUBLE_EQ(d.envelope->k, 3.0);
    EXPECT_EQ(d.envelope->trained_at, 599'000);
    for (const auto& p : d.points) {
      inside += p.value >= d.envelope->lower && p.value <= d.envelope->upper;
      ++total;
    }
  }
  ASSERT_EQ(total, 6u * 1'200u);
  // 2 (1 - Phi(3)) = 0.0027 of null samples fall outside.
  EXPECT_GE(static_cast<double>(inside) / static_cast<double>(total), 0.99);
}

TEST_F(ApiTest, ShiftedPointsLeaveTheBand) {
  const AnalyticsService svc(*store_, cache_);
  std::size_t outside = 0;
  std::size_t total = 0;
  double expected = 0.0;
  for (std::uint32_t s = 0; s < 6; ++s) {
    const auto d = svc.drilldown(2, s, 1'050'000, 150'000);  // [900 s, 1199 s]
    ASSERT_TRUE(d.envelope.has_value());
    const auto& e = *d.envelope;
    for (const auto& p : d.points) {
      if (p.timestamp_ms < 900'000) continue;
      outside += p.value < e.lower || p.value > e.upper;
      ++total;
    }
    // Shifted-normal oracle: X ~ N(mean + 3, 1) lands outside [lower, upper]
    // with probability P(X > upper) + P(X < lower).
    const double pu = 1.0 - testing::normal_cdf_oracle(e.upper - (e.mean + 3.0));
    const double pl = testing::normal_cdf_oracle(e.lower - (e.mean + 3.0));
    expected += (pu + pl) * 300.0;
  }
  ASSERT_EQ(total, 1'800u);
  const double rate = static_cast<double>(outside) / static_cast<double>(total);
  const double p = expected / static_cast<double>(total);
  EXPECT_NEAR(rate, p, 4.0 * std::sqrt(p * (1 - p) / static_cast<double>(total)));
  EXPECT_GT(p, 0.45);
}

TEST_F(ApiTest, DrilldownWithoutFlagsOrModel) {
  const AnalyticsService with_cache(*store_, cache_);
  const auto d = with_cache.drilldown(2, 0, 100'000, 30'000);
  EXPECT_TRUE(d.markers.empty());
  EXPECT_EQ(d.points.size(), 61u);
  const AnalyticsService no_cache(*store_, nullptr);
  const auto bare = no_cache.drilldown(2, 0, 100'000, 30'000);
  EXPECT_FALSE(bare.envelope.has_value());
  EXPECT_FALSE(to_json(bare).at("has_model").get<bool>());
  EXPECT_THROW(no_cache.drilldown(2, 99, 0, 10), NotFoundError);
}

TEST_F(ApiTest, FlagFeedPagesWithoutLossOrSplit) {
  const AnalyticsService svc(*store_, cache_);
  const auto everything = svc.flags_since(-1);
  ASSERT_FALSE(everything.flags.empty());
  EXPECT_EQ(everything.flags, all_flags(*store_));
  std::vector<detect::AnomalyFlag> replay;
  std::int64_t cursor = -1;
  for (int page = 0; page < 1'000; ++page) {
    const auto feed = svc.flags_since(cursor, 3);
    if (feed.flags.empty()) break;
    for (const auto& f : feed.flags) EXPECT_GT(f.timestamp_ms, cursor);
    replay.insert(replay.end(), feed.flags.begin(), feed.flags.end());
    cursor = feed.cursor_ms;
  }
  EXPECT_EQ(replay, everything.flags);
}

TEST_F(ApiTest, ServiceIsReadOnly) {
  const auto before = store_->shard_stats();
  const AnalyticsService svc(*store_, cache_);
  svc.fleet_summary();
  svc.unit_sensors(1, 0, 1'199'000, 100);
  svc.drilldown(1, 1, 950'000, 60'000);
  svc.flags_since(-1);
  EXPECT_EQ(store_->shard_stats(), before);
}

// ---- fixtures and contract -------------------------------------------------

// Structural comparison with a relative tolerance on numbers, so recorded
// fixtures survive last-bit differences across platforms.
std::string json_mismatch(const json& a, const json& b, const std::string& path = "$") {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>();
    const double y = b.get<double>();
    if (std::abs(x - y) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(y)})) return {};
    return path + ": " + a.dump() + " != " + b.dump();
  }
  if (a.type() != b.type()) return path + ": type " + a.type_name() + " != " + b.type_name();
  if (a.is_object()) {
    for (const auto& [k, v] : a.items()) {
      if (!b.contains(k)) return path + "." + k + ": missing";
      if (auto m = json_mismatch(v, b.at(k), path + "." + k); !m.empty()) return m;
    }
    for (const auto& [k, v] : b.items())
      if (!a.contains(k)) return path + "." + k + ": unexpected";
    return {};
  }
  if (a.is_array()) {
    if (a.size() != b.size()) return path + ": length " + std::to_string(a.size()) + " != " + std::to_string(b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      if (auto m = json_mismatch(a[i], b[i], path + "[" + std::to_string(i) + "]"); !m.empty()) return m;
    return {};
  }
  return a == b ? std::string{} : path + ": " + a.dump() + " != " + b.dump();
}

std::map<std::string, json> fixture_payloads(const AnalyticsService& svc) {
  const auto flags = svc.flags_since(-1);
  const auto& first = flags.flags.front();
  return {
      {"fleet.json", to_json(svc.fleet_summary())},
      {"unit_sensors.json", to_json(svc.unit_sensors(2, 0, 1'199'000, 40))},
      {"drilldown.json", to_json(svc.drilldown(first.unit_id, first.sensor_id, first.timestamp_ms, 120'000))},
      {"flags.json", to_json(flags)},
  };
}

TEST_F(ApiTest, PayloadsMatchRecordedFixtures) {
  const AnalyticsService svc(*store_, cache_);
  const fs::path dir = fs::path(FLEETMON_FIXTURE_DIR) / "api";
  const bool update = std::getenv("FLEETMON_UPDATE_FIXTURES") != nullptr;
  for (const auto& [name, payload] : fixture_payloads(svc)) {
    if (update) {
      fs::create_directories(dir);
      std::ofstream(dir / name) << payload.dump(2) << '\n';
      continue;
    }
    std::ifstream in(dir / name);
    ASSERT_TRUE(in.good()) << "missing fixture " << name;
    const json recorded = json::parse(in);
    EXPECT_EQ(json_mismatch(payload, recorded), "") << name;
  }
}

TEST_F(ApiTest, PayloadContract) {
  auto keys = [](const json& j) {
    std::set<std::string> k;
    for (const auto& [key, v] : j.items()) k.insert(key);
    return k;
  };
  const AnalyticsService svc(*store_, cache_);
  const auto p = fixture_payloads(svc);
  for (const auto& [name, j] : p) EXPECT_EQ(j.at("schema_version"), kSchemaVersion) << name;
  using S = std::set<std::string>;
  EXPECT_EQ(keys(p.at("fleet.json")), (S{"schema_version", "window_start", "window_end", "units"}));
  EXPECT_EQ(keys(p.at("fleet.json")["units"][0]),
            (S{"unit_id", "status", "active_anomaly_count", "flagged_sensors", "last_anomaly_timestamp"}));
  EXPECT_EQ(keys(p.at("unit_sensors.json")),
            (S{"schema_version", "unit_id", "from", "to", "max_points", "sensors"}));
  EXPECT_EQ(keys(p.at("unit_sensors.json")["sensors"][0]), (S{"sensor_id", "raw_count", "points", "markers"}));
  EXPECT_EQ(keys(p.at("unit_sensors.json")["sensors"][0]["points"][0]), (S{"t", "v"}));
  EXPECT_EQ(keys(p.at("drilldown.json")),
            (S{"schema_version", "unit_id", "sensor_id", "center", "half_width", "points", "markers",
               "has_model", "envelope"}));
  EXPECT_EQ(keys(p.at("drilldown.json")["markers"][0]), (S{"t", "p_value", "method", "rank"}));
  EXPECT_EQ(keys(p.at("drilldown.json")["envelope"]), (S{"mean", "sd", "k", "lower", "upper", "trained_at"}));
  EXPECT_EQ(keys(p.at("flags.json")), (S{"schema_version", "since", "cursor", "flags"}));
  EXPECT_EQ(keys(p.at("flags.json")["flags"][0]), (S{"unit_id", "sensor_id", "t", "p_value", "method", "rank"}));
  // The drill-down fixture is centred on the first flag and shows it.
  const auto& first_flag = p.at("flags.json")["flags"][0];
  bool shown = false;
  for (const auto& m : p.at("drilldown.json")["markers"])
    shown |= m["t"] == first_flag["t"] && m["p_value"] == first_flag["p_value"];
  EXPECT_TRUE(shown);
}

// ---- put body parsing -------------------------------------------------------

TEST(PutBody, ParsesArrayAndReportsBadEntries) {
  const auto r = parse_put_body(R"([
    {"metric": "energy", "timestamp": 1700000000, "value": 1.5, "tags": {"unit": "1", "sensor": 2}},
    {"metric": "energy", "timestamp": 1700000000123, "value": 2.5, "tags": {"unit": 1, "sensor": 3}},
    {"metric": "power", "timestamp": 1, "value": 1, "tags": {"unit": 1, "sensor": 3}},
    {"metric": "energy", "timestamp": 1, "value": "x", "tags": {"unit": 1, "sensor": 3}},
    {"metric": "energy", "timestamp": 1, "value": 1, "tags": {"unit": 1}}
  ])");
  ASSERT_EQ(r.samples.size(), 2u);
  EXPECT_EQ(r.samples[0], (sim::SensorSample{1, 2, 1'700'000'000'000, 1.5}));
  EXPECT_EQ(r.samples[1].timestamp_ms, 1'700'000'000'123);
  EXPECT_EQ(r.source_index, (std::vector<std::size_t>{0, 1}));
  ASSERT_EQ(r.errors.size(), 3u);
  EXPECT_EQ(r.errors[0].first, 2u);
  EXPECT_EQ(parse_put_body(R"({"metric":"energy","timestamp":5,"value":1,"tags":{"unit":0,"sensor":0}})")
                .samples.size(),
            1u);
  EXPECT_THROW(parse_put_body("[{"), ValidationError);
  EXPECT_THROW(parse_put_body("42"), ValidationError);
}

// ---- HTTP ------------------------------------------------------------------

class HttpTest : public ApiTest {
 protected:
  void start(ingest::Gateway* gw) {
    svc_ = std::make_unique<AnalyticsService>(*store_, cache_);
    server_ = std::make_unique<HttpServer>(*svc_, gw);
    port_ = server_->bind("127.0.0.1", 0);
    thread_ = std::jthread([this] { server_->listen(); });
  }
  void TearDown() override {
    if (server_) server_->stop();
    thread_ = {};
  }
  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  std::unique_ptr<AnalyticsService> svc_;
  std::unique_ptr<HttpServer> server_;
  std::jthread thread_;
  int port_{0};
};

TEST_F(HttpTest, ReadEndpoints) {
  start(nullptr);
  auto c = client();
  auto fleet = c.Get("/api/fleet");
  ASSERT_TRUE(fleet);
  EXPECT_EQ(fleet->status, 200);
  EXPECT_EQ(json::parse(fleet->body), to_json(svc_->fleet_summary()));
  auto sensors = c.Get("/api/units/2/sensors?from=0&to=1199000&max_points=20");
  ASSERT_TRUE(sensors);
  EXPECT_EQ(sensors->status, 200);
  EXPECT_EQ(json::parse(sensors->body).at("sensors").size(), 6u);
  auto drill = c.Get("/api/units/2/sensors/0/drilldown?center=960000&half_width=1000");
  ASSERT_TRUE(drill);
  EXPECT_EQ(json::parse(drill->body).at("points").size(), 3u);
  auto feed = c.Get("/api/flags?since=-1&limit=2");
  ASSERT_TRUE(feed);
  EXPECT_GE(json::parse(feed->body).at("flags").size(), 2u);
}

TEST_F(HttpTest, ErrorStatuses) {
  start(nullptr);
  auto c = client();
  auto missing = c.Get("/api/units/77/sensors");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body).at("error").at("code"), "not_found");
  auto bad = c.Get("/api/units/2/sensors?max_points=abc");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto no_center = c.Get("/api/units/2/sensors/0/drilldown");
  ASSERT_TRUE(no_center);
  EXPECT_EQ(no_center->status, 400);
  auto put = c.Post("/api/put", "[]", "application/json");
  ASSERT_TRUE(put);
  EXPECT_EQ(put->status, 503);
  EXPECT_TRUE(put->has_header("Retry-After"));
}

TEST_F(HttpTest, PutFeedsGatewayAndSignalsOverload) {
  tstore::Store sink;
  ingest::Gateway gw(sink, {1, 10, 1, ingest::OverloadPolicy::kRejectWithRetryAfter});
  start(&gw);
  auto c = client();
  const std::string body =
      R"([{"metric":"energy","timestamp":10,"value":1,"tags":{"unit":0,"sensor":0}},)"
      R"({"metric":"energy","timestamp":10,"value":"bad","tags":{"unit":0,"sensor":1}}])";
  gw.pause();
  auto first = c.Post("/api/put", body, "application/json");
  ASSERT_TRUE(first);
  EXPECT_EQ(first->status, 200);
  const auto r = json::parse(first->body);
  EXPECT_EQ(r.at("success"), 1);
  EXPECT_EQ(r.at("failed"), 1);
  EXPECT_EQ(r.at("errors")[0].at("index"), 1);
  auto second = c.Post("/api/put", body, "application/json");
  ASSERT_TRUE(second);
  EXPECT_EQ(second->status, 429);
  EXPECT_TRUE(second->has_header("Retry-After"));
  EXPECT_GE(json::parse(second->body).at("retry_after_ms").get<int>(), 1);
  gw.resume();
  gw.drain();
  EXPECT_EQ(sink.query({"energy", {}, 0, 100}).size(), 0u);  // seconds, so stored at 10 s
  EXPECT_EQ(sink.query({"energy", {}, 10'000, 10'000}).size(), 1u);
  auto malformed = c.Post("/api/put", "{", "application/json");
  ASSERT_TRUE(malformed);
  EXPECT_EQ(malformed->status, 400);
  gw.stop();
}

}  // namespace
}  // namespace fleetmon::api

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <pthread.h>

#include <json.hpp>

#include "fleetmon/api/http.hpp"
#include "fleetmon/api/service.hpp"
#include "fleetmon/detect/evaluate.hpp"
#include "fleetmon/detect/pipeline.hpp"
#include "fleetmon/error.hpp"
#include "fleetmon/ingest/benchmark.hpp"
#include "fleetmon/ingest/gateway.hpp"
#include "fleetmon/sim/records.hpp"
#include "support.hpp"

namespace fleetmon::cli {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxReportedErrors = 20;

tstore::StoreOptions store_options(const CommonOptions& common, const StoreLayoutOptions& layout) {
  tstore::StoreOptions o;
  o.n_shards = layout.shards;
  o.n_salt_buckets = layout.salt_buckets;
  o.data_dir = common.store();
  return o;
}

// Opens a store that an earlier `ingest` created.
tstore::StoreOptions existing_store(const CommonOptions& common) {
  if (!std::filesystem::exists(common.store() / "layout.json"))
    throw NotFoundError("no store at " + common.store().string() + " (run ingest first)");
  tstore::StoreOptions o;
  o.data_dir = common.store();
  return o;
}

ingest::GatewayConfig gateway_config(const GatewayOptions& g) {
  ingest::GatewayConfig c;
  c.n_writers = g.writers;
  c.queue_capacity = g.queue_capacity;
  c.batch_size = g.batch_size;
  c.overload_policy = ingest::parse_overload_policy(g.policy);
  c.validate();
  return c;
}

json report_json(const ingest::IngestReport& r, std::size_t retries) {
  return {{"offered", r.offered},   {"accepted", r.accepted},
          {"rejected", r.rejected}, {"invalid", r.invalid},
          {"stored", r.stored},     {"write_failures", r.write_failures},
          {"retries", retries},     {"duration_s", r.duration_s},
          {"per_second", r.per_second}};
}

// Pushes batches from `next` (which fills its argument and returns false at
// the end) through a gateway into `store`.
template <typename Source>
json feed_gateway(tstore::Store& store, const GatewayOptions& options, Source&& next) {
  const ingest::GatewayConfig cfg = gateway_config(options);
  ingest::Gateway gw(store, cfg);
  gw.start_metering();
  std::size_t retries = 0;
  for (;;) {
    std::vector<sim::SensorSample> batch;
    batch.reserve(cfg.batch_size);
    if (!next(batch, cfg.batch_size) && batch.empty()) break;
    if (!batch.empty()) retries += ingest::submit_with_retry(gw, std::move(batch));
  }
  gw.drain();
  gw.stop_metering();
  gw.stop();
  const ingest::IngestReport report = gw.report();
  store.flush();
  if (report.write_failures > 0)
    throw IoError(std::to_string(report.write_failures) + " samples failed to store");
  return report_json(report, retries);
}

std::string csv_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::vector<detect::UnitModel> load_models(const detect::ModelCache& cache,
                                           std::vector<std::uint32_t> units) {
  if (units.empty()) units = cache.units();
  if (units.empty()) throw NotFoundError("model cache is empty (run train first)");
  std::vector<detect::UnitModel> models;
  for (std::uint32_t u : units) models.push_back(cache.load(u));
  return models;
}

json options_json(const CommonOptions& c) {
  return {{"out_dir", c.out_dir.generic_string()},
          {"store_dir", c.store().generic_string()},
          {"cache_dir", c.cache().generic_string()},
          {"threads", c.threads}};
}

}  // namespace

int run_simulate(const CommonOptions& common, const SimulateOptions& o) {
  sim::FleetConfig cfg;
  cfg.n_units = o.units;
  cfg.n_sensors_per_unit = o.sensors;
  cfg.duration_s = o.duration_s;
  cfg.sample_rate_hz = o.rate_hz;
  cfg.seed = o.seed;
  cfg.noise_sigma = o.noise_sigma;
  for (const auto& spec : o.faults) cfg.fault_specs.push_back(parse_fault_spec(spec, o.noise_sigma));
  cfg.validate();

  const sim::FleetGenerator gen(cfg);
  sim::FleetStream stream(gen);
  auto next = [&](std::vector<sim::SensorSample>& out, std::size_t n) {
    return stream.next_batch(out, n) > 0;
  };

  if (o.to_stdout) {
    std::vector<sim::SensorSample> batch;
    while (next(batch, 4096)) {
      sim::write_records(std::cout, batch);
      batch.clear();
    }
    std::cout.flush();
    return 0;
  }

  std::filesystem::create_directories(common.out_dir);
  std::vector<std::filesystem::path> artifacts{"fleet.json"};
  json params = {{"units", o.units},     {"sensors", o.sensors},
                 {"duration_s", o.duration_s}, {"rate_hz", o.rate_hz},
                 {"seed", o.seed},       {"noise_sigma", o.noise_sigma},
                 {"faults", o.faults},   {"ingest", o.ingest}};
  write_file_atomic(common.out_dir / "fleet.json", fleet_to_json(cfg).dump(2) + "\n");

  {
    // Ground-truth onsets; labels for any timestamp follow from fleet.json.
    std::ostringstream gt;
    gt << "unit,sensor,kind,onset_ms\n";
    for (const auto& f : cfg.fault_specs)
      for (std::uint32_t s : f.sensor_set)
        gt << f.unit_id << ',' << s << ',' << sim::to_string(f.kind) << ','
           << gen.onset_ms(f.unit_id, s) << '\n';
    write_file_atomic(common.out_dir / "faults.csv", gt.str());
    artifacts.emplace_back("faults.csv");
  }

  if (o.ingest) {
    tstore::Store store(store_options(common, o.layout));
    const json report = feed_gateway(store, o.gateway, next);
    store.close();
    write_file_atomic(common.out_dir / "ingest_report.json", report.dump(2) + "\n");
    artifacts.emplace_back("ingest_report.json");
    params["store_dir"] = common.store().generic_string();
    std::cout << report.dump() << '\n';
  } else {
    const auto path = common.out_dir / "records.txt";
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      std::vector<sim::SensorSample> batch;
      while (next(batch, 4096)) {
        sim::write_records(out, batch);
        batch.clear();
      }
      out.flush();
      if (!out) throw IoError("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
    artifacts.emplace_back("records.txt");
  }
  update_manifest(common.out_dir, "simulate", common.config_file, params, artifacts);
  std::cout << "simulated " << cfg.total_samples() << " samples into "
            << common.out_dir.string() << '\n';
  return 0;
}

int run_ingest(const CommonOptions& common, const IngestOptions& o) {
  const auto input = o.input.empty() ? common.out_dir / "records.txt" : o.input;
  std::ifstream in(input);
  if (!in) throw NotFoundError("cannot open " + input.string());
  std::filesystem::create_directories(common.out_dir);

  tstore::Store store(store_options(common, o.layout));
  std::size_t line_no = 0;
  std::size_t bad_lines = 0;
  json line_errors = json::array();
  std::string line;
  auto next = [&](std::vector<sim::SensorSample>& out, std::size_t n) {
    while (out.size() < n && std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        out.push_back(sim::parse_record(line));
      } catch (const ValidationError& e) {
        ++bad_lines;
        if (line_errors.size() < kMaxReportedErrors)
          line_errors.push_back({{"line", line_no}, {"error", e.what()}});
      }
    }
    return out.size() == n;
  };
  json report = feed_gateway(store, o.gateway, next);
  store.close();
  report["malformed_lines"] = bad_lines;
  report["line_errors"] = std::move(line_errors);
  report["input"] = input.generic_string();
  write_file_atomic(common.out_dir / "ingest_report.json", report.dump(2) + "\n");
  json params = options_json(common);
  params["input"] = input.generic_string();
  params["writers"] = o.gateway.writers;
  params["queue_capacity"] = o.gateway.queue_capacity;
  params["batch_size"] = o.gateway.batch_size;
  params["policy"] = o.gateway.policy;
  params["shards"] = o.layout.shards;
  params["salt_buckets"] = o.layout.salt_buckets;
  update_manifest(common.out_dir, "ingest", common.config_file, params, {"ingest_report.json"});
  std::cout << "stored " << report["stored"].get<std::uint64_t>() << " samples ("
            << bad_lines << " malformed lines)\n";
  return bad_lines > 0 ? 3 : 0;
}

int run_bench(const CommonOptions& common, const BenchOptions& o) {
  sim::FleetConfig fleet;
  fleet.n_units = o.units;
  fleet.n_sensors_per_unit = o.sensors;
  fleet.sample_rate_hz = o.rate_hz;
  fleet.seed = o.seed;
  fleet.validate();
  ingest::BenchmarkOptions bo;
  bo.run_seconds = o.run_seconds;
  bo.warmup_seconds = o.warmup_seconds;
  bo.replay_seconds = o.replay_seconds;
  bo.n_producers = o.producers;
  bo.store.n_shards = o.layout.shards;
  bo.store.n_salt_buckets = o.layout.salt_buckets;
  const auto rows = ingest::run_benchmark(fleet, gateway_config(o.gateway), o.writers, bo);

  std::filesystem::create_directories(common.out_dir);
  std::ostringstream csv;
  ingest::write_benchmark_csv(csv, rows);
  write_file_atomic(common.out_dir / "bench.csv", csv.str());
  std::ostringstream summary;
  summary << "n_writers,steady_state_rate,cv\n";
  for (const auto& r : rows) {
    const std::size_t skip = std::min<std::size_t>(
        static_cast<std::size_t>(o.warmup_seconds), r.per_second.size());
    const std::span<const std::uint64_t> steady(r.per_second.data() + skip,
                                                r.per_second.size() - skip);
    summary << r.n_writers << ',' << csv_double(r.steady_state_rate) << ','
            << csv_double(ingest::coefficient_of_variation(steady)) << '\n';
  }
  write_file_atomic(common.out_dir / "bench_summary.csv", summary.str());
  std::cout << summary.str();
  json params = {{"writers", o.writers}, {"run_seconds", o.run_seconds},
                 {"warmup_seconds", o.warmup_seconds}, {"replay_seconds", o.replay_seconds},
                 {"producers", o.producers},
                 {"units", o.units}, {"sensors", o.sensors}, {"seed", o.seed},
                 {"rate_hz", o.rate_hz}, {"queue_capacity", o.gateway.queue_capacity},
                 {"batch_size", o.gateway.batch_size}, {"policy", o.gateway.policy},
                 {"shards", o.layout.shards}, {"salt_buckets", o.layout.salt_buckets}};
  update_manifest(common.out_dir, "ingest-bench", common.config_file, params,
                  {"bench.csv", "bench_summary.csv"});
  return 0;
}

int run_train(const CommonOptions& common, const TrainOptionsCli& o) {
  tstore::Store store(existing_store(common));
  const detect::ModelCache cache(common.cache());
  detect::TrainOptions t;
  t.units = o.units;
  t.start_ms = o.from_ms;
  t.end_ms = o.to_ms;
  if (o.rank > 0) t.rank.fixed_rank = o.rank;
  t.rank.variance_share = o.variance_share;
  t.n_threads = common.threads;
  const auto outcomes = detect::train_fleet(store, t, cache);

  json units = json::array();
  int status = 0;
  for (const auto& out : outcomes) {
    json u = {{"unit_id", out.unit_id}, {"ok", !out.error.has_value()}};
    if (out.error) {
      u["error"] = {{"code", to_string(*out.error)}, {"message", out.message}};
      status = 4;
      std::cerr << "unit " << out.unit_id << ": " << out.message << '\n';
    } else {
      u["rank"] = out.rank;
    }
    units.push_back(std::move(u));
  }
  if (outcomes.empty()) throw NotFoundError("no units to train");
  std::filesystem::create_directories(common.out_dir);
  write_file_atomic(common.out_dir / "train_report.json",
                    json({{"units", std::move(units)}}).dump(2) + "\n");
  json params = options_json(common);
  params["units"] = o.units;
  params["from_ms"] = o.from_ms;
  params["to_ms"] = o.to_ms;
  params["rank"] = o.rank;
  params["variance_share"] = o.variance_share;
  update_manifest(common.out_dir, "train", common.config_file, params, {"train_report.json"});
  std::cout << "trained " << outcomes.size() << " unit(s) into " << common.cache().string()
            << '\n';
  return status;
}

int run_score(const CommonOptions& common, const ScoreOptionsCli& o) {
  detect::MultipleTestConfig mt{detect::parse_method(o.method), o.level};
  mt.validate();
  tstore::Store store(existing_store(common));
  const detect::ModelCache cache(common.cache());
  const auto models = load_models(cache, o.units);
  detect::ScoreOptions so{o.from_ms, o.to_ms, o.window, common.threads};
  const auto windows = detect::score_store(store, models, so);
  const auto flags = detect::flag_windows(store, windows, mt);
  store.flush();
  store.close();

  std::ostringstream csv;
  csv << "unit,sensor,timestamp_ms,p_value,method,rank\n";
  for (const auto& f : flags)
    csv << f.unit_id << ',' << f.sensor_id << ',' << f.timestamp_ms << ','
        << csv_double(f.p_value) << ',' << detect::to_string(f.method) << ',' << f.rank << '\n';
  std::filesystem::create_directories(common.out_dir);
  write_file_atomic(common.out_dir / "flags.csv", csv.str());
  json params = options_json(common);
  params["method"] = o.method;
  params["level"] = o.level;
  params["window"] = o.window;
  params["units"] = o.units;
  params["from_ms"] = o.from_ms;
  params["to_ms"] = o.to_ms;
  update_manifest(common.out_dir, "score", common.config_file, params, {"flags.csv"});
  std::cout << "scored " << windows.size() << " window(s), " << flags.size() << " flag(s)\n";
  return 0;
}

int run_evaluate(const CommonOptions& common, const EvaluateOptions& o) {
  const auto fleet_file = o.fleet_file.empty() ? common.out_dir / "fleet.json" : o.fleet_file;
  const sim::FleetGenerator truth(load_fleet_file(fleet_file));
  std::vector<detect::MultipleTestConfig> configs;
  for (const auto& m : o.methods) {
    detect::MultipleTestConfig c{detect::parse_method(m), o.level};
    c.validate();
    configs.push_back(c);
  }
  tstore::Store store(existing_store(common));
  const detect::ModelCache cache(common.cache());
  const auto models = load_models(cache, {});
  detect::ScoreOptions so{o.from_ms, o.to_ms, o.window, common.threads};
  const auto windows = detect::score_store(store, models, so);
  store.close();

  std::vector<detect::EvaluationMetrics> rows;
  for (const auto& c : configs) rows.push_back(detect::evaluate_detector(windows, truth, c));
  std::ostringstream csv;
  detect::write_evaluation_csv(csv, rows);
  std::filesystem::create_directories(common.out_dir);
  write_file_atomic(common.out_dir / "evaluation.csv", csv.str());
  std::cout << csv.str();
  json params = options_json(common);
  params["fleet_file"] = fleet_file.generic_string();
  params["methods"] = o.methods;
  params["level"] = o.level;
  params["window"] = o.window;
  params["from_ms"] = o.from_ms;
  params["to_ms"] = o.to_ms;
  update_manifest(common.out_dir, "evaluate", common.config_file, params, {"evaluation.csv"});
  return 0;
}

int run_serve(const CommonOptions& common, const ServeOptions& o) {
  // Block termination signals before any thread starts so only the waiter
  // below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  tstore::StoreOptions so;
  so.data_dir = common.store();
  tstore::Store store(so);
  std::unique_ptr<detect::ModelCache> cache;
  if (std::filesystem::exists(common.cache()))
    cache = std::make_unique<detect::ModelCache>(common.cache());

  api::ServiceConfig sc;
  sc.window_ms = o.window_ms;
  if (!o.method.empty()) sc.method = detect::parse_method(o.method);
  const api::AnalyticsService service(store, cache.get(), sc);
  ingest::Gateway gateway(store, gateway_config(o.gateway));
  api::HttpServer server(service, &gateway, o.static_dir);
  const int port = server.bind(o.host, o.port);
  if (!o.port_file.empty()) write_file_atomic(o.port_file, std::to_string(port) + "\n");
  std::cout << "listening on http://" << o.host << ':' << port << std::endl;

  std::atomic<bool> signalled{false};
  std::jthread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    signalled = true;
    server.stop();
  });
  server.listen();
  // Release the waiter if the server stopped for another reason.
  if (!signalled) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  gateway.stop();
  store.flush();
  store.close();
  return 0;
}

}  // namespace fleetmon::cli

// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

// fleetmon: simulate -> ingest -> train -> score -> evaluate, plus the ingest
// benchmark and the HTTP server.
//
// Exit codes: 0 ok, 1 internal, 2 usage or config, 3 invalid data,
// 4 not found or partial failure, 5 corrupt or incompatible files, 6 I/O,
// 7 capacity or unavailable.

#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "fleetmon/error.hpp"
#include "support.hpp"

namespace {

using namespace fleetmon;
using namespace fleetmon::cli;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return 2;
    case ErrorCode::kValidation:
    case ErrorCode::kAlignment:
    case ErrorCode::kInsufficientData: return 3;
    case ErrorCode::kNotFound: return 4;
    case ErrorCode::kCorruption:
    case ErrorCode::kMigration: return 5;
    case ErrorCode::kIo: return 6;
    case ErrorCode::kCapacity:
    case ErrorCode::kUnavailable: return 7;
  }
  return 1;
}

void report_error(std::string_view code, std::string_view message) {
  nlohmann::json doc = {{"error", {{"code", std::string(code)}, {"message", std::string(message)}}}};
  std::cerr << doc.dump() << '\n';
}

void add_common(CLI::App* sub, CommonOptions& c, bool out_required) {
  auto* out = sub->add_option("--out-dir", c.out_dir, "Directory for every artifact of the run");
  if (out_required) out->required();
  sub->add_option("--store-dir", c.store_dir, "Store directory (default <out-dir>/store)");
  sub->add_option("--cache-dir", c.cache_dir, "Model cache directory (default <out-dir>/models)");
  sub->add_option("--threads", c.threads, "Worker threads")->capture_default_str();
}

void add_layout(CLI::App* sub, StoreLayoutOptions& l) {
  sub->add_option("--shards", l.shards, "Store shards (new stores only)")->capture_default_str();
  sub->add_option("--salt-buckets", l.salt_buckets, "Salt buckets, 1 disables salting (new stores only)")
      ->capture_default_str();
}

void add_gateway(CLI::App* sub, GatewayOptions& g) {
  sub->add_option("--writers", g.writers, "Gateway writer threads")->capture_default_str();
  sub->add_option("--queue-capacity", g.queue_capacity, "Outstanding batches before overload")
      ->capture_default_str();
  sub->add_option("--batch-size", g.batch_size, "Samples per submitted batch")->capture_default_str();
  sub->add_option("--policy", g.policy, "Overload policy")
      ->check(CLI::IsMember({"reject", "block"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fleetmon: fleet sensor monitoring with false-discovery-rate control"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON config file: {\"<subcommand>\": {\"<option>\": value}}");
  app.config_formatter(std::make_shared<JsonConfig>(&app));

  CommonOptions common;
  common.threads = std::max(1u, std::thread::hardware_concurrency());

  SimulateOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic fleet dataset");
  add_common(simulate, common, true);
  simulate->add_option("--units", sim_opts.units, "Units")->capture_default_str();
  simulate->add_option("--sensors", sim_opts.sensors, "Sensors per unit")->capture_default_str();
  simulate->add_option("--duration", sim_opts.duration_s, "Duration in seconds")->capture_default_str();
  simulate->add_option("--rate", sim_opts.rate_hz, "Sample rate in Hz (at most 1000)")
      ->capture_default_str();
  simulate->add_option("--seed", sim_opts.seed, "Random seed")->capture_default_str();
  simulate->add_option("--noise-sigma", sim_opts.noise_sigma, "Noise standard deviation")
      ->capture_default_str();
  simulate->add_option("--fault", sim_opts.faults,
                       "Fault kind:unit:sensors:onset_s[:magnitude], e.g. shift:0:0-4:120:3 or "
                       "drift:1:2,3:60:0.01 (repeatable)");
  simulate->add_flag("--stdout", sim_opts.to_stdout, "Write records to stdout only");
  simulate->add_flag("--ingest", sim_opts.ingest,
                     "Feed the gateway directly instead of writing records.txt");
  add_layout(simulate, sim_opts.layout);
  add_gateway(simulate, sim_opts.gateway);

  IngestOptions ingest_opts;
  auto* ingest = app.add_subcommand("ingest", "Load a record file into the store");
  add_common(ingest, common, true);
  ingest->add_option("--input", ingest_opts.input, "Record file (default <out-dir>/records.txt)");
  add_layout(ingest, ingest_opts.layout);
  add_gateway(ingest, ingest_opts.gateway);

  BenchOptions bench_opts;
  auto* bench = app.add_subcommand("ingest-bench", "Measure ingest rate per writer count");
  add_common(bench, common, true);
  bench->add_option("--writer-counts", bench_opts.writers, "Writer counts to test")
      ->capture_default_str();
  bench->add_option("--duration", bench_opts.run_seconds, "Seconds per writer count")
      ->capture_default_str();
  bench->add_option("--warmup", bench_opts.warmup_seconds, "Warmup seconds excluded")
      ->capture_default_str();
  bench->add_option("--replay", bench_opts.replay_seconds,
                    "Cycle over this many simulated seconds (0: ever-newer timestamps)")
      ->capture_default_str();
  bench->add_option("--producers", bench_opts.producers, "Producer threads")->capture_default_str();
  bench->add_option("--units", bench_opts.units, "Units")->capture_default_str();
  bench->add_option("--sensors", bench_opts.sensors, "Sensors per unit")->capture_default_str();
  bench->add_option("--rate", bench_opts.rate_hz, "Simulated sample rate in Hz")
      ->capture_default_str();
  bench->add_option("--seed", bench_opts.seed, "Random seed")->capture_default_str();
  add_layout(bench, bench_opts.layout);
  add_gateway(bench, bench_opts.gateway);

  TrainOptionsCli train_opts;
  auto* train = app.add_subcommand("train", "Fit and cache one model per unit");
  add_common(train, common, true);
  train->add_option("--units", train_opts.units, "Units to train (default all)");
  train->add_option("--from", train_opts.from_ms, "Window start, ms (inclusive)");
  train->add_option("--to", train_opts.to_ms, "Window end, ms (inclusive)");
  train->add_option("--rank", train_opts.rank, "Retained components, 0 for automatic")
      ->capture_default_str();
  train->add_option("--variance-share", train_opts.variance_share,
                    "Automatic rank: variance share to retain")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  ScoreOptionsCli score_opts;
  auto* score = app.add_subcommand("score", "Score windows and write anomaly flags");
  add_common(score, common, true);
  score->add_option("--units", score_opts.units, "Units to score (default all cached)");
  score->add_option("--method", score_opts.method, "Rejection rule")
      ->check(CLI::IsMember({"bh", "by", "bonferroni", "uncorrected"}))
      ->capture_default_str();
  score->add_option("--level", score_opts.level, "q for bh/by, alpha otherwise")
      ->capture_default_str();
  score->add_option("--window", score_opts.window, "Samples per window")->capture_default_str();
  score->add_option("--from", score_opts.from_ms, "Range start, ms");
  score->add_option("--to", score_opts.to_ms, "Range end, ms");

  EvaluateOptions eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "Compare rejection rules against ground truth");
  add_common(evaluate, common, true);
  evaluate->add_option("--fleet", eval_opts.fleet_file,
                       "Fleet description (default <out-dir>/fleet.json)");
  evaluate->add_option("--methods", eval_opts.methods, "Rules to compare")
      ->check(CLI::IsMember({"bh", "by", "bonferroni", "uncorrected"}))
      ->capture_default_str();
  evaluate->add_option("--level", eval_opts.level, "q or alpha")->capture_default_str();
  evaluate->add_option("--window", eval_opts.window, "Samples per window")->capture_default_str();
  evaluate->add_option("--from", eval_opts.from_ms, "Range start, ms");
  evaluate->add_option("--to", eval_opts.to_ms, "Range end, ms");

  ServeOptions serve_opts;
  auto* serve = app.add_subcommand("serve", "Run the put endpoint and the analytics API");
  add_common(serve, common, false);
  serve->add_option("--host", serve_opts.host, "Bind address")->capture_default_str();
  serve->add_option("--port", serve_opts.port, "Port, 0 for any free port")->capture_default_str();
  serve->add_option("--static-dir", serve_opts.static_dir, "Directory served at /");
  serve->add_option("--port-file", serve_opts.port_file, "Write the bound port here");
  serve->add_option("--method", serve_opts.method, "Only show flags of this rule")
      ->check(CLI::IsMember({"bh", "by", "bonferroni", "uncorrected"}));
  serve->add_option("--window-ms", serve_opts.window_ms, "Scoring window length in ms")
      ->capture_default_str();
  add_gateway(serve, serve_opts.gateway);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ConfigError& e) {
    const auto* opt = app.get_config_ptr();
    const std::string file = opt != nullptr && opt->count() > 0 ? opt->as<std::string>() : "config";
    report_error("config", file + ": " + e.what());
    return 2;
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 2;
  } catch (const Error& e) {
    report_error(to_string(e.code()), e.what());
    return exit_code(e.code());
  }

  if (const auto* opt = app.get_config_ptr(); opt != nullptr && opt->count() > 0)
    common.config_file = opt->as<std::string>();
  if (common.out_dir.empty()) common.out_dir = ".";

  try {
    if (simulate->parsed()) return run_simulate(common, sim_opts);
    if (ingest->parsed()) return run_ingest(common, ingest_opts);
    if (bench->parsed()) return run_bench(common, bench_opts);
    if (train->parsed()) return run_train(common, train_opts);
    if (score->parsed()) return run_score(common, score_opts);
    if (evaluate->parsed()) return run_evaluate(common, eval_opts);
    if (serve->parsed()) return run_serve(common, serve_opts);
  } catch (const Error& e) {
    report_error(to_string(e.code()), e.what());
    return exit_code(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    report_error("io", e.what());
    return 6;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  return 1;
}

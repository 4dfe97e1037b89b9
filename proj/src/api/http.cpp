// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/api/http.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include <httplib.h>

#include "fleetmon/api/json.hpp"
#include "fleetmon/error.hpp"

namespace fleetmon::api {

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

template <typename T>
T param(const httplib::Request& req, const char* name, T fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string text = req.get_param_value(name);
  T out{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ValidationError(std::string("query parameter '") + name + "' is not a valid integer");
  return out;
}

std::uint32_t path_id(const httplib::Request& req, std::size_t index, const char* what) {
  const std::string text = req.matches[static_cast<int>(index)];
  std::uint32_t out = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ValidationError(std::string(what) + " id out of range");
  return out;
}

// Maps library errors onto HTTP statuses.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      int status = 500;
      switch (e.code()) {
        case ErrorCode::kNotFound: status = 404; break;
        case ErrorCode::kValidation:
        case ErrorCode::kConfig:
        case ErrorCode::kAlignment: status = 400; break;
        case ErrorCode::kUnavailable:
          status = 503;
          res.set_header("Retry-After", "1");
          break;
        default: break;
      }
      send(res, status, error_json(to_string(e.code()), e.what()));
    } catch (const std::exception& e) {
      send(res, 500, error_json("internal", e.what()));
    }
  };
}

}  // namespace

HttpServer::HttpServer(const AnalyticsService& service, ingest::Gateway* gateway,
                       std::filesystem::path static_dir)
    : service_(service),
      gateway_(gateway),
      static_dir_(std::move(static_dir)),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  httplib::Server& s = *server_;

  s.Post("/api/put", guarded([this](const httplib::Request& req, httplib::Response& res) {
    if (gateway_ == nullptr) throw UnavailableError("ingest is not enabled on this server");
    PutParseResult parsed = parse_put_body(req.body);
    nlohmann::json errors = nlohmann::json::array();
    std::size_t success = 0;
    if (!parsed.samples.empty()) {
      std::vector<sim::SensorSample> batch = std::move(parsed.samples);
      const ingest::SubmitResult r = gateway_->submit(std::move(batch));
      if (!r.accepted()) {
        const auto ms = r.retry_after.count();
        res.set_header("Retry-After", std::to_string(std::max<std::int64_t>(1, (ms + 999) / 1000)));
        nlohmann::json body = error_json("overloaded", "ingest queue is full, retry later");
        body["retry_after_ms"] = ms;
        send(res, 429, body);
        return;
      }
      success = r.accepted_samples;
      for (const auto& bad : r.invalid)
        parsed.errors.emplace_back(parsed.source_index[bad.index], bad.message);
    }
    std::sort(parsed.errors.begin(), parsed.errors.end());
    for (const auto& [index, why] : parsed.errors)
      errors.push_back({{"index", index}, {"error", why}});
    send(res, 200,
         {{"schema_version", kSchemaVersion},
          {"success", success},
          {"failed", parsed.errors.size()},
          {"errors", std::move(errors)}});
  }));

  s.Get("/api/fleet", guarded([this](const httplib::Request&, httplib::Response& res) {
    send(res, 200, to_json(service_.fleet_summary()));
  }));

  s.Get(R"(/api/units/(\d+)/sensors)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          const auto unit = path_id(req, 1, "unit");
          const auto from = param<std::int64_t>(req, "from", 0);
          const auto to = param<std::int64_t>(req, "to", std::numeric_limits<std::int64_t>::max());
          const auto max_points = param<std::size_t>(req, "max_points", kDefaultMaxPoints);
          send(res, 200, to_json(service_.unit_sensors(unit, from, to, max_points)));
        }));

  s.Get(R"(/api/units/(\d+)/sensors/(\d+)/drilldown)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          const auto unit = path_id(req, 1, "unit");
          const auto sensor = path_id(req, 2, "sensor");
          if (!req.has_param("center"))
            throw ValidationError("query parameter 'center' is required");
          const auto center = param<std::int64_t>(req, "center", 0);
          const auto half = param<std::int64_t>(req, "half_width", kDefaultHalfWidthMs);
          send(res, 200, to_json(service_.drilldown(unit, sensor, center, half)));
        }));

  s.Get("/api/flags", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto since = param<std::int64_t>(req, "since", -1);
    const auto limit = param<std::size_t>(req, "limit", 10'000);
    send(res, 200, to_json(service_.flags_since(since, limit)));
  }));

  if (!static_dir_.empty()) s.set_mount_point("/", static_dir_.string());
}

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace fleetmon::api

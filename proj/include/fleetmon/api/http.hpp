// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file http.hpp
/// @brief HTTP front end: the put endpoint feeding the gateway plus the
/// read-only analytics routes.
///
///   POST /api/put
///   GET  /api/fleet
///   GET  /api/units/{id}/sensors?from&to&max_points
///   GET  /api/units/{id}/sensors/{sid}/drilldown?center&half_width
///   GET  /api/flags?since&limit
///
/// Errors are JSON `{schema_version, error: {code, message}}` with 400, 404,
/// 429 (overload, with Retry-After) or 503.

#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "fleetmon/api/service.hpp"
#include "fleetmon/ingest/gateway.hpp"

namespace httplib {
class Server;
}

namespace fleetmon::api {

inline constexpr std::size_t kDefaultMaxPoints = 500;
inline constexpr std::int64_t kDefaultHalfWidthMs = 300'000;

class HttpServer {
 public:
  /// `gateway` may be null, which disables POST /api/put (503). A non-empty
  /// `static_dir` is served at `/`.
  HttpServer(const AnalyticsService& service, ingest::Gateway* gateway,
             std::filesystem::path static_dir = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port. Throws IoError.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void listen();
  void stop();

 private:
  void install_routes();

  const AnalyticsService& service_;
  ingest::Gateway* gateway_;
  std::filesystem::path static_dir_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace fleetmon::api

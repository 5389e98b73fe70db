#pragma once

#include <cstdlib>
#include <string>
#include <utility>

#include "alphadda/session.hpp"
#include "httplib.h"

namespace alphadda {

/// host:port from ADDA_BIND, defaulting to 127.0.0.1:8080.
inline std::pair<std::string, int> bind_address(const char* env_value = std::getenv("ADDA_BIND")) {
  std::string v = env_value && *env_value ? env_value : "127.0.0.1:8080";
  const auto colon = v.rfind(':');
  if (colon == std::string::npos) throw ConfigError("ADDA_BIND must be host:port, got '" + v + "'");
  int port = 0;
  try {
    port = std::stoi(v.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("ADDA_BIND has a bad port: '" + v + "'");
  }
  if (port < 0 || port > 65535) throw ConfigError("ADDA_BIND port out of range: '" + v + "'");
  return {v.substr(0, colon), port};
}

/// Routes (all JSON):
///   GET  /api/health
///   GET  /api/agents
///   POST /api/sessions
///   GET  /api/sessions/:id
///   POST /api/sessions/:id/moves
/// Optionally serves a static directory at "/".
inline void install_routes(httplib::Server& server, SessionManager& sessions, const std::string& static_dir = "") {
  auto send = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto guarded = [send](auto&& fn) {
    return [fn, send](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const ServiceError& e) {
        send(res, e.status(), e.body());
      } catch (const json::exception& e) {
        send(res, 400, {{"error", std::string("bad JSON: ") + e.what()}});
      } catch (const std::exception& e) {
        send(res, 500, {{"error", e.what()}});
      }
    };
  };
  auto body_json = [](const httplib::Request& req) { return req.body.empty() ? json::object() : json::parse(req.body); };

  server.set_payload_max_length(1 << 16);
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/api/health", guarded([send](const httplib::Request&, httplib::Response& res) {
               send(res, 200, {{"status", "ok"}});
             }));
  server.Get("/api/agents", guarded([send](const httplib::Request&, httplib::Response& res) {
               send(res, 200, SessionManager::agent_catalog());
             }));
  server.Post("/api/sessions", guarded([&sessions, send, body_json](const httplib::Request& req, httplib::Response& res) {
                send(res, 201, sessions.create(body_json(req)));
              }));
  server.Get("/api/sessions/:id", guarded([&sessions, send](const httplib::Request& req, httplib::Response& res) {
               send(res, 200, sessions.get(req.path_params.at("id")));
             }));
  server.Post("/api/sessions/:id/moves",
              guarded([&sessions, send, body_json](const httplib::Request& req, httplib::Response& res) {
                send(res, 200, sessions.play(req.path_params.at("id"), body_json(req)));
              }));
  if (!static_dir.empty() && !server.set_mount_point("/", static_dir))
    throw ConfigError("static directory '" + static_dir + "' does not exist");
}

}  // namespace alphadda

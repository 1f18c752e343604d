#pragma once

#include <memory>
#include <optional>
#include <string>

#include "treasure/session.hpp"

namespace httplib {
class Server;
}

namespace treasure::server {

struct HttpOptions {
  std::optional<std::string> static_dir;  // served under /
  int max_wait_ms = 25000;                // long-poll cap
};

// HTTP front end for a SessionManager.
//   GET  /health
//   POST /sessions
//   GET  /sessions/{id}/view?token=
//   POST /sessions/{id}/moves        {token, round, action, cell}
//   GET  /sessions/{id}/log          text/csv
//   POST /sessions/{id}/messages     {type: join|move, token, ...}
//   GET  /sessions/{id}/messages?token=&since=&wait_ms=
// Errors come back as {"type":"error","code","detail"} with a matching status.
class HttpServer {
 public:
  HttpServer(SessionManager& sessions, HttpOptions options = {});
  ~HttpServer();

  // Returns false when the address cannot be bound (for example, port in use).
  bool bind(const std::string& host, int port);
  // Binds an ephemeral port and returns it, or -1.
  int bind_any(const std::string& host);
  // Blocks until stop(). Also runs round timeouts.
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  SessionManager& sessions_;
  HttpOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace treasure::server

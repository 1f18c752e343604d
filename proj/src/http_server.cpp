#include "treasure/http_server.hpp"

#include <atomic>
#include <thread>

#include <httplib.h>

namespace treasure::server {

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const SessionError& e) { send_json(res, e.to_json(), e.status); }

nlohmann::json parse_body(const httplib::Request& req) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw SessionError("validation", 400, std::string("malformed JSON: ") + e.what());
  }
}

std::string token_of(const httplib::Request& req, const nlohmann::json* body = nullptr) {
  if (req.has_param("token")) return req.get_param_value("token");
  if (req.has_header("X-Seat-Token")) return req.get_header_value("X-Seat-Token");
  if (body && body->is_object() && body->contains("token") && (*body)["token"].is_string())
    return (*body)["token"].get<std::string>();
  return "";
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const SessionError& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_error(res, SessionError("internal", 500, e.what()));
    }
  };
}

long long int_param(const httplib::Request& req, const char* name, long long fallback) {
  if (!req.has_param(name)) return fallback;
  try {
    return std::stoll(req.get_param_value(name));
  } catch (const std::exception&) {
    throw SessionError("validation", 400, std::string("bad integer parameter ") + name);
  }
}

}  // namespace

HttpServer::HttpServer(SessionManager& sessions, HttpOptions options)
    : sessions_(sessions), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  // The library default adds SO_REUSEPORT, which would let a second server
  // share a port silently; a busy port must fail the bind instead.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  s.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"status", "ok"}});
  });

  s.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const Created c = sessions_.create(SessionSpec::from_json(parse_body(req)));
           json tokens = json::array();
           for (const auto& [seat, token] : c.tokens) tokens.push_back({{"seat", seat}, {"token", token}});
           send_json(res, {{"id", c.id}, {"phase", to_string(c.phase)}, {"tokens", tokens}}, 201);
         }));

  s.Get(R"(/sessions/([0-9a-f]+)/view)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, sessions_.view(req.matches[1], token_of(req)));
        }));

  s.Post(R"(/sessions/([0-9a-f]+)/moves)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const nlohmann::json body = parse_body(req);
           if (!body.is_object() || !body.contains("round") || !body["round"].is_number_integer())
             throw SessionError("validation", 400, "move needs an integer round");
           send_json(res, sessions_.submit_move(req.matches[1], token_of(req, &body), body["round"].get<int>(),
                                                parse_move(body)));
         }));

  s.Get(R"(/sessions/([0-9a-f]+)/log)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          res.set_content(sessions_.log_csv(req.matches[1]), "text/csv");
        }));

  s.Post(R"(/sessions/([0-9a-f]+)/messages)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           nlohmann::json body = parse_body(req);
           if (body.is_object() && !body.contains("token")) body["token"] = token_of(req);
           send_json(res, sessions_.handle_message(req.matches[1], body));
         }));

  s.Get(R"(/sessions/([0-9a-f]+)/messages)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          const long long since = std::max(0LL, int_param(req, "since", 0));
          const long long wait =
              std::clamp(int_param(req, "wait_ms", 0), 0LL, static_cast<long long>(options_.max_wait_ms));
          send_json(res, sessions_.poll(req.matches[1], token_of(req), static_cast<std::uint64_t>(since),
                                        std::chrono::milliseconds(wait)));
        }));

  if (options_.static_dir) s.set_mount_point("/", *options_.static_dir);
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

int HttpServer::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::serve() {
  std::atomic<bool> running{true};
  std::thread ticker([&] {
    while (running) {
      sessions_.tick();
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  });
  const bool ok = server_->listen_after_bind();
  running = false;
  ticker.join();
  return ok;
}

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace treasure::server

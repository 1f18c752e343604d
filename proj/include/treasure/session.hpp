#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "treasure/agents.hpp"
#include "treasure/engine.hpp"

namespace treasure::server {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

enum class Phase { Lobby, AwaitingMoves, Resolved, Finished };
std::string_view to_string(Phase p);

// Carries a machine-readable code and the HTTP status it maps to.
class SessionError : public std::runtime_error {
 public:
  SessionError(std::string code, int status, const std::string& detail)
      : std::runtime_error(detail), code(std::move(code)), status(status) {}
  std::string code;
  int status;
  json to_json() const;
};

struct SeatPlan {
  bool human = true;
  Strategy bot{};  // used when !human
};

struct SessionSpec {
  Condition condition = Condition::Protection;
  std::optional<int> map_id;           // library map of game 1; later games step through the library
  std::optional<std::uint64_t> seed;   // costs and bot randomness; drawn when absent
  std::vector<SeatPlan> seats;
  int games = 4;
  int rounds = 50;
  int first_reward = 320;
  std::optional<int> timeout_ms;       // per round; a late human seat auto-skips

  // Parses the POST /sessions body. Throws SessionError("validation").
  static SessionSpec from_json(const nlohmann::json& body);
  void validate() const;
};

inline constexpr int kLibrarySize = 10;
// Map `id` of the fixed library (0..9).
TreasureMap library_map(int id);

struct Created {
  std::string id;
  std::vector<std::pair<int, std::string>> tokens;  // (seat, token) for human seats
  Phase phase;
};

class Session;

struct ManagerOptions {
  std::optional<std::filesystem::path> log_dir;  // per-session CSV + manifest
  std::optional<std::uint64_t> token_seed;       // deterministic ids and tokens (tests)
};

// Owns every live session. Each session serializes its own mutations;
// distinct sessions proceed concurrently.
class SessionManager {
 public:
  explicit SessionManager(ManagerOptions options = {});
  ~SessionManager();

  Created create(const SessionSpec& spec);

  // Marks the seat present; the session starts when every human seat has joined.
  json join(const std::string& id, const std::string& token);
  // Ack {"ok":true,"round":r}. Errors: auth, out_of_sync, duplicate, illegal_cell, phase.
  json submit_move(const std::string& id, const std::string& token, int round, const Move& move);
  // The engine's player view for the seat plus session state. Joins implicitly.
  json view(const std::string& id, const std::string& token);
  // Decision log so far in the engine CSV format.
  std::string log_csv(const std::string& id);
  // Messages for the seat with sequence number >= since, waiting up to `wait`
  // for at least one.
  json poll(const std::string& id, const std::string& token, std::uint64_t since,
            std::chrono::milliseconds wait = std::chrono::milliseconds(0));
  // Client message (type join or move); returns the reply message.
  json handle_message(const std::string& id, const nlohmann::json& message);

  // Applies round timeouts due at `now`. Returns the number of auto-skips.
  int tick(Clock::time_point now = Clock::now());

  Phase phase(const std::string& id);
  std::vector<std::string> ids() const;

 private:
  std::shared_ptr<Session> find(const std::string& id) const;
  std::string fresh_token();

  ManagerOptions options_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex token_mutex_;
  std::uint64_t token_key_ = 0;
  std::uint64_t token_counter_ = 0;
};

// Parses {"action":"skip"} or {"action":"search","cell":[col,row]}.
Move parse_move(const nlohmann::json& body);

}  // namespace treasure::server

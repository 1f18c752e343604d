#include "treasure/session.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "treasure/decision_log.hpp"
#include "treasure/random.hpp"

namespace treasure::server {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Lobby: return "lobby";
    case Phase::AwaitingMoves: return "awaiting_moves";
    case Phase::Resolved: return "resolved";
    case Phase::Finished: return "finished";
  }
  return "?";
}

json SessionError::to_json() const { return {{"type", "error"}, {"code", code}, {"detail", what()}}; }

namespace {

SessionError validation(const std::string& detail) { return SessionError("validation", 400, detail); }

constexpr std::uint64_t kLibrarySeed = 20250101;

json cell_json(HexCoord c) { return json::array({c.col, c.row}); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t entropy() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string wall_clock() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

TreasureMap library_map(int id) {
  if (id < 0 || id >= kLibrarySize) throw validation("map_id must lie in [0, " + std::to_string(kLibrarySize) + ")");
  static std::mutex m;
  static std::array<std::optional<TreasureMap>, kLibrarySize> cache;
  std::lock_guard lock(m);
  if (!cache[id]) cache[id] = generate_map(derive_key(kLibrarySeed, Purpose::MapLibrary, {static_cast<std::uint64_t>(id)}));
  return *cache[id];
}

Move parse_move(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("action") || !body["action"].is_string())
    throw validation("move needs an action");
  const std::string action = body["action"];
  if (action == "skip") return Move::skip();
  if (action != "search") throw validation("action must be skip or search");
  const auto& cell = body.value("cell", nlohmann::json());
  if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number_integer() || !cell[1].is_number_integer())
    throw validation("search needs cell [col,row]");
  return Move::search({cell[0].get<int>(), cell[1].get<int>()});
}

SessionSpec SessionSpec::from_json(const nlohmann::json& body) {
  if (!body.is_object()) throw validation("body must be a JSON object");
  SessionSpec s;
  try {
    if (!body.contains("condition")) throw validation("condition is required");
    s.condition = parse_condition(body.at("condition").get<std::string>());
    if (body.contains("map_id")) s.map_id = body.at("map_id").get<int>();
    if (body.contains("seed")) s.seed = body.at("seed").get<std::uint64_t>();
    s.games = body.value("games", s.games);
    s.rounds = body.value("rounds", s.rounds);
    s.first_reward = body.value("first_reward", s.first_reward);
    if (body.contains("timeout_ms")) s.timeout_ms = body.at("timeout_ms").get<int>();
    if (!body.contains("seats") || !body.at("seats").is_array()) throw validation("seats must be an array");
    for (const auto& seat : body.at("seats")) {
      const std::string type = seat.is_string() ? seat.get<std::string>() : seat.at("type").get<std::string>();
      if (type == "human") {
        s.seats.push_back({true, {}});
      } else if (type == "bot") {
        Strategy st{20, 20};
        if (seat.is_object()) {
          st.initial_threshold = seat.value("initial", st.initial_threshold);
          st.sequential_threshold = seat.value("sequential", st.sequential_threshold);
        }
        s.seats.push_back({false, st});
      } else {
        throw validation("seat type must be human or bot, got " + type);
      }
    }
  } catch (const SessionError&) {
    throw;
  } catch (const std::exception& e) {
    throw validation(e.what());
  }
  s.validate();
  return s;
}

void SessionSpec::validate() const {
  if (seats.empty() || seats.size() > 32) throw validation("between 1 and 32 seats");
  if (games < 1) throw validation("games must be at least 1");
  if (rounds < 1) throw validation("rounds must be at least 1");
  if (timeout_ms && *timeout_ms <= 0) throw validation("timeout_ms must be positive");
  if (map_id && (*map_id < 0 || *map_id >= kLibrarySize)) throw validation("map_id out of range");
  for (const SeatPlan& p : seats)
    if (!p.human) {
      try {
        p.bot.validate();
      } catch (const std::exception& e) {
        throw validation(e.what());
      }
    }
}

// One session. Every member is guarded by `mutex`.
class Session {
 public:
  std::mutex mutex;
  std::condition_variable changed;

  std::string id;
  SessionSpec spec;
  std::uint64_t seed = 0;
  int first_map = 0;
  std::vector<std::string> tokens;  // empty for bots
  std::vector<bool> joined;
  std::vector<std::unique_ptr<ThresholdAgent>> bots;

  Phase phase = Phase::Lobby;
  int game_index = 0;
  std::unique_ptr<GameState> state;
  std::vector<int> costs;
  std::unique_ptr<MoveSet> moves;
  Clock::time_point deadline{};
  std::vector<Points> grand_totals;
  std::vector<DecisionRecord> log;
  std::vector<std::vector<json>> queues;
  std::optional<std::filesystem::path> log_path;
  std::optional<std::filesystem::path> manifest_path;
  std::string created_at;

  int n() const { return static_cast<int>(spec.seats.size()); }
  int map_for(int game) const { return (first_map + game - 1) % kLibrarySize; }
  int current_round() const { return state ? state->rounds_played() + 1 : 0; }

  int seat_of(const std::string& token) const {
    for (int p = 0; p < n(); ++p)
      if (!tokens[p].empty() && tokens[p] == token) return p;
    throw SessionError("auth", 403, "unknown seat token");
  }

  void push(int seat, json message) {
    if (spec.seats[seat].human == false) return;
    message["seq"] = queues[seat].size();
    queues[seat].push_back(std::move(message));
  }
  void broadcast(const json& message) {
    for (int p = 0; p < n(); ++p) push(p, message);
  }

  void mark_joined(int seat) {
    joined[seat] = true;
    if (phase == Phase::Lobby && std::all_of(joined.begin(), joined.end(), [](bool b) { return b; })) {
      start_game(1);
      advance();
    }
  }

  void start_game(int index) {
    game_index = index;
    GameConfig cfg;
    cfg.condition = spec.condition;
    cfg.n_players = n();
    cfg.rounds = spec.rounds;
    cfg.first_reward = spec.first_reward;
    cfg.seed = seed;
    cfg.game_index = index;
    cfg.map_id = map_for(index);
    state = std::make_unique<GameState>(cfg, library_map(cfg.map_id));
    for (int p = 0; p < n(); ++p)
      if (bots[p]) bots[p]->begin_game(*state, p);
    start_round();
  }

  void start_round() {
    costs = state->draw_costs();
    moves = std::make_unique<MoveSet>(n());
    phase = Phase::AwaitingMoves;
    if (spec.timeout_ms) deadline = Clock::now() + std::chrono::milliseconds(*spec.timeout_ms);
    const int round = current_round();
    for (int p = 0; p < n(); ++p) {
      if (bots[p]) {
        moves->submit(p, bots[p]->decide(LiveView(*state, p), costs[p]));
      } else {
        push(p, {{"type", "round_start"}, {"round", round}, {"cost", costs[p]}, {"game_index", game_index}});
      }
    }
  }

  // Resolves rounds for as long as every seat has moved; bots alone never block.
  void advance() {
    while (phase == Phase::AwaitingMoves && moves->complete()) resolve();
    changed.notify_all();
  }

  void resolve() {
    phase = Phase::Resolved;  // held only while the results are distributed
    const RoundResult res = state->resolve(moves->moves());
    const auto& full = state->log();
    const std::vector<DecisionRecord> fresh(full.end() - n(), full.end());
    append_log(fresh);

    const BoardDims dims = state->map().dims;
    for (int p = 0; p < n(); ++p) {
      const ViewDelta delta = state->delta_for(res, p);
      if (bots[p]) {
        bots[p]->observe(delta);
        continue;
      }
      const LiveView live(*state, p);
      json reveals = json::array();
      for (HexCoord c : delta.own_failures)
        reveals.push_back({{"cell", cell_json(c)}, {"color", to_string(CellColor::OwnBlack)}, {"owner", p}});
      for (const Reveal& r : delta.treasures) {
        int owner = -1;
        for (int q = 0; q < n() && owner < 0; ++q)
          if ((r.credited >> q) & 1u) owner = q;
        reveals.push_back(
            {{"cell", cell_json(r.cell)}, {"color", to_string(live.color(dims.index(r.cell)))}, {"owner", owner}});
      }
      json zones = json::array();
      auto add_zone = [&](int z) {
        const ProtectionZone& zone = state->zones()[z];
        json cells = json::array();
        for (HexCoord c : zone.cells) cells.push_back(cell_json(c));
        zones.push_back({{"cells", cells}, {"owner", zone.owner}, {"active", zone.active}});
      };
      for (int z : delta.zones_opened) add_zone(z);
      for (int z : delta.zones_closed) add_zone(z);
      push(p, {{"type", "round_result"},
               {"round", res.round},
               {"payoff", res.payoffs[p].value()},
               {"total", state->payoff(p).value()},
               {"reveals", reveals},
               {"zones", zones}});
    }

    if (!state->over()) {
      start_round();
      return;
    }
    json totals = json::array();
    for (int p = 0; p < n(); ++p) {
      grand_totals[p] += state->payoff(p);
      totals.push_back(state->payoff(p).value());
    }
    broadcast({{"type", "game_over"}, {"totals", totals}, {"game_index", game_index}});
    if (game_index < spec.games) {
      start_game(game_index + 1);
      return;
    }
    phase = Phase::Finished;
    json grand = json::array();
    for (const Points& t : grand_totals) grand.push_back(t.value());
    broadcast({{"type", "session_over"}, {"grand_totals", grand}});
    write_manifest();
  }

  void append_log(const std::vector<DecisionRecord>& records) {
    log.insert(log.end(), records.begin(), records.end());
    if (!log_path) return;
    std::ofstream out(*log_path, std::ios::app);
    write_log(out, records, false);
    out.flush();
    if (!out) throw std::runtime_error("cannot append to " + log_path->string());
  }

  json manifest() const {
    json seats = json::array();
    for (const SeatPlan& s : spec.seats)
      seats.push_back(s.human ? json{{"type", "human"}}
                              : json{{"type", "bot"},
                                     {"initial", s.bot.initial_threshold},
                                     {"sequential", s.bot.sequential_threshold}});
    json maps = json::array();
    for (int g = 1; g <= spec.games; ++g) maps.push_back(map_for(g));
    json grand = json::array();
    for (const Points& t : grand_totals) grand.push_back(t.value());
    return {{"id", id},
            {"condition", to_string(spec.condition)},
            {"seed", seed},
            {"map_ids", maps},
            {"games", spec.games},
            {"rounds", spec.rounds},
            {"first_reward", spec.first_reward},
            {"timeout_ms", spec.timeout_ms ? json(*spec.timeout_ms) : json(nullptr)},
            {"seats", seats},
            {"log", log_path ? json(log_path->filename().string()) : json(nullptr)},
            {"created", created_at},
            {"phase", to_string(phase)},
            {"grand_totals", grand}};
  }

  void write_manifest() const {
    if (!manifest_path) return;
    std::ofstream out(*manifest_path, std::ios::trunc);
    out << manifest().dump(2) << '\n';
  }

  json view(int seat) const {
    json out{{"type", "view"},
             {"session", id},
             {"seat", seat},
             {"phase", to_string(phase)},
             {"condition", to_string(spec.condition)},
             {"game_index", game_index},
             {"games", spec.games}};
    json grand = json::array();
    if (phase == Phase::Finished)
      for (const Points& t : grand_totals) grand.push_back(t.value());
    else
      grand.push_back(grand_totals[seat].value());
    out["grand_totals"] = grand;
    if (!state) return out;
    const PlayerView v = state->view(seat);
    out["round"] = phase == Phase::AwaitingMoves ? current_round() : state->rounds_played();
    if (phase == Phase::AwaitingMoves) {
      const bool done = moves->has(seat);
      out["cost"] = costs[seat];
      out["submitted"] = done;
      if (done) out["message"] = "wait for the other players";
    }
    json cells = json::array();
    for (int i = 0; i < v.dims.cell_count(); ++i)
      if (v.cells[i] != CellColor::Unknown)
        cells.push_back({{"cell", cell_json(v.dims.coord(i))}, {"color", to_string(v.cells[i])}});
    json zones = json::array();
    for (const ZoneView& z : v.zones) {
      json zc = json::array();
      for (HexCoord c : z.cells) zc.push_back(cell_json(c));
      zones.push_back({{"cells", zc}, {"owner", z.owner}, {"own", z.own}, {"active", z.active}});
    }
    out["board"] = {{"width", v.dims.width},
                    {"height", v.dims.height},
                    {"rounds_played", v.rounds_played},
                    {"rounds", v.rounds},
                    {"over", v.over},
                    {"payoff", v.payoff.value()},
                    {"cells", cells},
                    {"zones", zones}};
    return out;
  }
};

SessionManager::SessionManager(ManagerOptions options) : options_(std::move(options)) {
  token_key_ = options_.token_seed ? *options_.token_seed : entropy();
  if (options_.log_dir) std::filesystem::create_directories(*options_.log_dir);
}

SessionManager::~SessionManager() = default;

std::string SessionManager::fresh_token() {
  std::lock_guard lock(token_mutex_);
  const std::uint64_t k = token_counter_++;
  return hex64(derive_key(token_key_, Purpose::Session, {k, 0})) + hex64(derive_key(token_key_, Purpose::Session, {k, 1}));
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionError("not_found", 404, "no session " + id);
  return it->second;
}

Created SessionManager::create(const SessionSpec& spec) {
  spec.validate();
  auto s = std::make_shared<Session>();
  s->spec = spec;
  s->seed = spec.seed ? *spec.seed : entropy();
  s->first_map = spec.map_id ? *spec.map_id : static_cast<int>(s->seed % kLibrarySize);
  s->id = fresh_token().substr(0, 16);
  s->created_at = wall_clock();
  const int n = s->n();
  s->tokens.resize(n);
  s->joined.assign(n, false);
  s->bots.resize(n);
  s->queues.resize(n);
  s->grand_totals.assign(n, Points{});
  Created out;
  for (int p = 0; p < n; ++p) {
    if (spec.seats[p].human) {
      s->tokens[p] = fresh_token();
      out.tokens.emplace_back(p, s->tokens[p]);
    } else {
      s->bots[p] = std::make_unique<ThresholdAgent>(spec.seats[p].bot);
      s->joined[p] = true;
    }
  }
  // Surface engine-level config errors before anything is stored.
  try {
    GameConfig probe;
    probe.condition = spec.condition;
    probe.n_players = n;
    probe.rounds = spec.rounds;
    probe.first_reward = spec.first_reward;
    probe.validate();
  } catch (const std::exception& e) {
    throw validation(e.what());
  }
  if (options_.log_dir) {
    s->log_path = *options_.log_dir / (s->id + ".csv");
    s->manifest_path = *options_.log_dir / (s->id + ".json");
    std::ofstream(*s->log_path) << kLogHeader << '\n';
  }
  {
    std::lock_guard lock(s->mutex);
    s->write_manifest();
    // A session without humans is never waited on.
    if (std::all_of(s->joined.begin(), s->joined.end(), [](bool b) { return b; })) {
      s->start_game(1);
      s->advance();
    }
    out.phase = s->phase;
  }
  out.id = s->id;
  std::unique_lock lock(mutex_);
  sessions_[s->id] = s;
  return out;
}

json SessionManager::join(const std::string& id, const std::string& token) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const int seat = s->seat_of(token);
  s->mark_joined(seat);
  return {{"type", "joined"}, {"session", id}, {"seat", seat}, {"phase", to_string(s->phase)}};
}

json SessionManager::submit_move(const std::string& id, const std::string& token, int round, const Move& move) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const int seat = s->seat_of(token);
  if (!s->joined[seat]) s->mark_joined(seat);
  if (s->phase != Phase::AwaitingMoves)
    throw SessionError("phase", 409, std::string("session is ") + std::string(to_string(s->phase)));
  const int current = s->current_round();
  if (round != current)
    throw SessionError("out_of_sync", 409,
                       "round " + std::to_string(round) + " is not the current round " + std::to_string(current));
  if (s->moves->has(seat)) throw SessionError("duplicate", 409, "move already submitted for round " + std::to_string(round));
  if (move.is_search()) {
    const BoardDims dims = s->state->map().dims;
    if (!dims.contains(move.cell) || !s->state->is_legal(seat, dims.index(move.cell)))
      throw SessionError("illegal_cell", 422, "cell " + to_string(move.cell) + " cannot be searched");
  }
  s->moves->submit(seat, move);
  s->advance();
  return {{"type", "ack"}, {"ok", true}, {"round", round}};
}

json SessionManager::view(const std::string& id, const std::string& token) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const int seat = s->seat_of(token);
  if (!s->joined[seat]) s->mark_joined(seat);
  return s->view(seat);
}

std::string SessionManager::log_csv(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  std::ostringstream out;
  write_log(out, s->log);
  return out.str();
}

json SessionManager::poll(const std::string& id, const std::string& token, std::uint64_t since,
                          std::chrono::milliseconds wait) {
  auto s = find(id);
  std::unique_lock lock(s->mutex);
  const int seat = s->seat_of(token);
  s->changed.wait_for(lock, wait, [&] { return s->queues[seat].size() > since; });
  json messages = json::array();
  const auto& q = s->queues[seat];
  for (std::size_t k = since; k < q.size(); ++k) messages.push_back(q[k]);
  return {{"messages", messages}, {"next", q.size()}};
}

json SessionManager::handle_message(const std::string& id, const nlohmann::json& message) {
  if (!message.is_object() || !message.contains("type") || !message["type"].is_string())
    throw validation("message needs a type");
  const std::string type = message["type"];
  const std::string token = message.value("token", "");
  if (type == "join") return join(id, token);
  if (type == "move") {
    if (!message.contains("round") || !message["round"].is_number_integer()) throw validation("move needs a round");
    return submit_move(id, token, message["round"].get<int>(), parse_move(message));
  }
  throw validation("unknown message type " + type);
}

int SessionManager::tick(Clock::time_point now) {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  int skipped = 0;
  for (const auto& s : all) {
    std::lock_guard lock(s->mutex);
    if (!s->spec.timeout_ms || s->phase != Phase::AwaitingMoves || now < s->deadline) continue;
    for (int p = 0; p < s->n(); ++p)
      if (!s->moves->has(p)) {
        s->moves->submit(p, Move::skip());
        ++skipped;
      }
    s->advance();
  }
  return skipped;
}

Phase SessionManager::phase(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->phase;
}

std::vector<std::string> SessionManager::ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

}  // namespace treasure::server

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "treasure/hexmap.hpp"
#include "treasure/points.hpp"

namespace treasure {

enum class Condition { Protection, NoProtection, Singleton };

std::string_view to_string(Condition c);
// Accepts "protection", "no_protection" (also "no-protection", "noprotection")
// and "singleton", case-insensitive. Throws std::invalid_argument otherwise.
Condition parse_condition(std::string_view text);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GameConfig {
  Condition condition = Condition::Protection;
  int n_players = 4;
  int rounds = 50;
  int first_reward = 320;
  int subsequent_reward = 80;
  std::vector<int> cost_support{5, 10, 15, 20, 25, 30, 35};
  // Co-finder count -> share of the gross reward, in twentieths (4 == 0.2).
  std::map<int, int> split_twentieths{{2, 4}, {3, 1}, {4, 0}};
  std::uint64_t seed = 0;
  int game_index = 1;
  int map_id = 0;

  void validate() const;
  // Share in twentieths for k simultaneous finders of one cell; 20 when k == 1.
  int share_for(int finders) const;
};

enum class CellColor : std::uint8_t { Unknown, OwnBlack, OwnYellow, OtherRed };

std::string_view to_string(CellColor c);

struct ProtectionZone {
  int mine = -1;
  int owner = -1;
  HexCoord anchor{};
  std::vector<HexCoord> cells;  // mine cells plus every neighbour of the anchor
  bool active = false;
};

struct Move {
  enum class Kind : std::uint8_t { Skip, Search };
  Kind kind = Kind::Skip;
  HexCoord cell{};

  static Move skip() { return {}; }
  static Move search(HexCoord c) { return {Kind::Search, c}; }
  bool is_search() const { return kind == Kind::Search; }
  bool operator==(const Move&) const = default;
};

enum class Outcome : std::uint8_t { None, Fail, FirstTreasure, SubsequentTreasure };

std::string_view to_string(Outcome o);

struct DecisionRecord {
  Condition condition = Condition::Protection;
  int map_id = 0;
  std::uint64_t seed = 0;
  int game_index = 1;
  int round = 1;  // 1-based
  int player = 0;
  int cost = 0;
  bool search = false;
  std::optional<HexCoord> cell;
  Outcome outcome = Outcome::None;
  int n_cofinders = 0;
  Points reward_gross;
  Points payoff_net;
  bool open_own_mine = false;
  bool open_any_mine = false;
  bool other_found_last_round = false;

  bool operator==(const DecisionRecord&) const = default;
};

struct Reveal {
  HexCoord cell{};
  int board = 0;               // 0 on shared boards, the player on Singleton boards
  std::uint32_t finders = 0;   // everyone who searched the cell this round
  std::uint32_t credited = 0;  // finders paid under the reward rule (tie losers excluded)
  bool first = false;          // opened its mine
};

struct RoundResult {
  int round = 0;  // 1-based round that was just resolved
  std::vector<int> costs;
  std::vector<Move> moves;
  std::vector<Points> payoffs;
  std::vector<Reveal> reveals;
  std::vector<HexCoord> failures;  // parallel to failed_by
  std::vector<int> failed_by;
  std::vector<int> zones_opened;  // indices into GameState::zones()
  std::vector<int> zones_closed;
};

// What one player learns from a resolved round: own failures and the public
// treasures (plus zone changes) visible on that player's board.
struct ViewDelta {
  int round = 0;
  std::vector<HexCoord> own_failures;
  std::vector<Reveal> treasures;
  std::vector<int> zones_opened;
  std::vector<int> zones_closed;
};

class SequencingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ProtocolError : public std::invalid_argument {
 public:
  ProtocolError(int player, const std::string& what);
  int player;
};

class IllegalMoveError : public std::invalid_argument {
 public:
  IllegalMoveError(int player, HexCoord cell, const std::string& why);
  int player;
  HexCoord cell;
};

class GameState;

// Read-only window onto the live state restricted to one player's
// information set (own failures, public treasures, zone outlines).
class LiveView {
 public:
  LiveView(const GameState& state, int player) : state_(&state), player_(player) {}

  int player() const { return player_; }
  Condition condition() const;
  BoardDims dims() const;
  int round() const;  // number of resolved rounds
  CellColor color(int cell_index) const;
  bool legal(int cell_index) const;
  bool in_foreign_zone(int cell_index) const;
  const std::vector<ProtectionZone>& zones() const;

 private:
  const GameState* state_;
  int player_;
};

struct ZoneView {
  std::vector<HexCoord> cells;
  int owner = -1;
  bool own = false;
  bool active = false;
};

struct RevealView {
  HexCoord cell{};
  CellColor color = CellColor::Unknown;
  std::vector<int> finders;
};

// Owned snapshot of one player's information set.
struct PlayerView {
  int player = 0;
  Condition condition = Condition::Protection;
  BoardDims dims{};
  int rounds_played = 0;
  int rounds = 0;
  bool over = false;
  Points payoff;
  std::vector<CellColor> cells;
  std::vector<RevealView> treasures;
  std::vector<ZoneView> zones;  // active zones only

  CellColor color(HexCoord c) const { return cells[dims.index(c)]; }
  bool legal(HexCoord c) const;
};

class GameState {
 public:
  GameState(GameConfig config, TreasureMap map);

  const GameConfig& config() const { return config_; }
  const TreasureMap& map() const { return map_; }
  int rounds_played() const { return round_; }
  bool over() const { return round_ >= config_.rounds; }
  Points payoff(int player) const { return payoffs_.at(player); }
  const std::vector<DecisionRecord>& log() const { return log_; }
  const std::vector<ProtectionZone>& zones() const { return zones_; }

  int board_of(int player) const {
    return config_.condition == Condition::Singleton ? player : 0;
  }
  int mine_at(int cell_index) const { return mine_lookup_[cell_index]; }
  bool revealed(int board, int cell_index) const { return finders_[board][cell_index] != 0; }
  std::uint32_t finders(int board, int cell_index) const { return finders_[board][cell_index]; }
  std::uint32_t credited(int board, int cell_index) const { return credited_[board][cell_index]; }
  int mine_revealed(int board, int mine) const { return mine_revealed_[board][mine]; }
  bool black(int player, int cell_index) const { return (black_[cell_index] >> player) & 1u; }
  std::uint32_t zone_owners(int cell_index) const { return zone_mask_[cell_index]; }

  bool is_legal(int player, int cell_index) const;
  // Exploitable open mine: own active zone (Protection), own partially
  // revealed mine (Singleton), any partially revealed mine (NoProtection).
  bool has_open_own_mine(int player) const;
  bool has_open_any_mine(int player) const;

  std::vector<int> draw_costs() const;
  RoundResult resolve(std::span<const Move> moves);
  ViewDelta delta_for(const RoundResult& result, int player) const;
  PlayerView view(int player) const;

 private:
  GameConfig config_;
  TreasureMap map_;
  std::vector<int> mine_lookup_;
  int round_ = 0;
  std::vector<Points> payoffs_;
  // Per board, per cell bitmasks. A treasure is revealed iff finders != 0;
  // credited drops Protection tie losers.
  std::vector<std::vector<std::uint32_t>> finders_;
  std::vector<std::vector<std::uint32_t>> credited_;
  std::vector<std::vector<int>> mine_revealed_;
  std::vector<std::vector<int>> mine_zone_;  // zone index per mine or -1
  std::vector<std::uint32_t> black_;         // per cell, bit per player
  std::vector<std::uint32_t> zone_mask_;     // per cell, owners of active zones
  std::vector<ProtectionZone> zones_;
  std::vector<bool> other_found_last_round_;
  std::vector<DecisionRecord> log_;

  void rebuild_zone_mask(const ProtectionZone& zone);
};

// Collects one move per player for a round; duplicates are protocol errors.
class MoveSet {
 public:
  explicit MoveSet(int n_players) : moves_(n_players), present_(n_players, false) {}
  void submit(int player, Move move);
  bool has(int player) const { return present_.at(player); }
  bool complete() const;
  std::span<const Move> moves() const;

 private:
  std::vector<Move> moves_;
  std::vector<bool> present_;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin_game(const GameState& state, int player) = 0;
  virtual Move decide(const LiveView& view, int cost) = 0;
  virtual void observe(const ViewDelta& delta) = 0;
};

class RunAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

GameState new_game(GameConfig config, TreasureMap map);
// Deterministic in (seed, game_index, round, player).
std::vector<int> draw_costs(const GameState& state);
std::vector<HexCoord> legal_cells(const GameState& state, int player);
RoundResult resolve_round(GameState& state, std::span<const Move> moves);
PlayerView player_view(const GameState& state, int player);

// Plays `state` to the end with one agent per player.
void play_out(GameState& state, std::span<Agent* const> agents);
std::vector<DecisionRecord> run_game(const GameConfig& config, const TreasureMap& map,
                                     std::span<Agent* const> agents);

// Re-resolves every round from the logged moves; the returned log equals
// the input iff the log is faithful to (config, map).
std::vector<DecisionRecord> replay_game(const GameConfig& config, const TreasureMap& map,
                                        std::span<const DecisionRecord> records);

}  // namespace treasure

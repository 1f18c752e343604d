#include "treasure/engine.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>

#include "treasure/random.hpp"

namespace treasure {

// Points live here rather than in their own file; nothing else needs a .cpp.
std::string Points::to_string() const {
  const std::int64_t mag = units_ < 0 ? -units_ : units_;
  std::string out = units_ < 0 ? "-" : "";
  out += std::to_string(mag / kScale);
  const std::int64_t frac = (mag % kScale) * 5;  // hundredths
  if (frac != 0) {
    out += '.';
    out += static_cast<char>('0' + frac / 10);
    if (frac % 10) out += static_cast<char>('0' + frac % 10);
  }
  return out;
}

Points Points::parse(std::string_view text) {
  const std::string original(text);
  auto fail = [&] { return std::invalid_argument("not an exact point value: '" + original + "'"); };
  bool neg = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    neg = text.front() == '-';
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() || (dot != std::string_view::npos && frac.empty())) throw fail();
  std::int64_t w = 0;
  auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
  if (ec != std::errc{} || p != whole.data() + whole.size()) throw fail();
  while (frac.size() > 2 && frac.back() == '0') frac.remove_suffix(1);
  if (frac.size() > 2) throw fail();
  int hundredths = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    hundredths *= 10;
    if (i < frac.size()) {
      if (!std::isdigit(static_cast<unsigned char>(frac[i]))) throw fail();
      hundredths += frac[i] - '0';
    }
  }
  if (hundredths % 5) throw fail();
  const std::int64_t units = w * kScale + hundredths / 5;
  return Points(neg ? -units : units);
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Protection: return "protection";
    case Condition::NoProtection: return "no_protection";
    case Condition::Singleton: return "singleton";
  }
  return "unknown";
}

Condition parse_condition(std::string_view text) {
  std::string s;
  for (char ch : text)
    if (ch != '_' && ch != '-') s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "protection") return Condition::Protection;
  if (s == "noprotection") return Condition::NoProtection;
  if (s == "singleton") return Condition::Singleton;
  throw std::invalid_argument("unknown condition '" + std::string(text) + "'");
}

std::string_view to_string(CellColor c) {
  switch (c) {
    case CellColor::Unknown: return "unknown";
    case CellColor::OwnBlack: return "black";
    case CellColor::OwnYellow: return "yellow";
    case CellColor::OtherRed: return "red";
  }
  return "unknown";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::None: return "none";
    case Outcome::Fail: return "fail";
    case Outcome::FirstTreasure: return "first_treasure";
    case Outcome::SubsequentTreasure: return "subsequent_treasure";
  }
  return "none";
}

void GameConfig::validate() const {
  if (n_players < 1 || n_players > 32) throw ConfigError("n_players must be in 1..32");
  if (rounds < 0) throw ConfigError("rounds must be non-negative");
  if (first_reward < 0 || subsequent_reward < 0) throw ConfigError("rewards must be non-negative");
  if (cost_support.empty()) throw ConfigError("cost support is empty");
  for (std::size_t i = 0; i < cost_support.size(); ++i) {
    if (cost_support[i] <= 0) throw ConfigError("costs must be positive");
    if (i && cost_support[i] <= cost_support[i - 1])
      throw ConfigError("cost support must be strictly ascending");
  }
  // Only shared boards can have co-finders.
  if (condition == Condition::Singleton) return;
  int prev = 20;
  for (int k = 2; k <= n_players; ++k) {
    auto it = split_twentieths.find(k);
    if (it == split_twentieths.end())
      throw ConfigError("split fraction missing for " + std::to_string(k) + " co-finders");
    const int f = it->second;
    if (f < 0 || f > prev) throw ConfigError("split fractions must be non-increasing");
    if (f * k > 20) throw ConfigError("split fraction for " + std::to_string(k) + " exceeds 1/k");
    prev = f;
  }
}

int GameConfig::share_for(int finders) const {
  if (finders <= 1) return 20;
  auto it = split_twentieths.find(finders);
  return it == split_twentieths.end() ? 0 : it->second;
}

ProtocolError::ProtocolError(int player_, const std::string& what)
    : std::invalid_argument("player " + std::to_string(player_) + ": " + what), player(player_) {}

IllegalMoveError::IllegalMoveError(int player_, HexCoord cell_, const std::string& why)
    : std::invalid_argument("player " + std::to_string(player_) + " cannot search " +
                            to_string(cell_) + ": " + why),
      player(player_),
      cell(cell_) {}

Condition LiveView::condition() const { return state_->config().condition; }
BoardDims LiveView::dims() const { return state_->map().dims; }
int LiveView::round() const { return state_->rounds_played(); }
const std::vector<ProtectionZone>& LiveView::zones() const { return state_->zones(); }

CellColor LiveView::color(int i) const {
  const int b = state_->board_of(player_);
  if (state_->revealed(b, i))
    return (state_->credited(b, i) >> player_) & 1u ? CellColor::OwnYellow : CellColor::OtherRed;
  return state_->black(player_, i) ? CellColor::OwnBlack : CellColor::Unknown;
}

bool LiveView::legal(int i) const { return state_->is_legal(player_, i); }

bool LiveView::in_foreign_zone(int i) const {
  return (state_->zone_owners(i) & ~(1u << player_)) != 0;
}

bool PlayerView::legal(HexCoord c) const {
  if (!dims.contains(c) || color(c) != CellColor::Unknown) return false;
  for (const ZoneView& z : zones)
    if (z.active && !z.own && std::find(z.cells.begin(), z.cells.end(), c) != z.cells.end())
      return false;
  return true;
}

GameState::GameState(GameConfig config, TreasureMap map)
    : config_(std::move(config)), map_(std::move(map)) {
  config_.validate();
  const auto problems = validate_map(map_);
  if (!problems.empty())
    throw ConfigError("invalid map: " + problems.front().detail);
  mine_lookup_ = map_.mine_lookup();
  const int cells = map_.dims.cell_count();
  const int boards = config_.condition == Condition::Singleton ? config_.n_players : 1;
  payoffs_.assign(config_.n_players, Points{});
  finders_.assign(boards, std::vector<std::uint32_t>(cells, 0));
  credited_.assign(boards, std::vector<std::uint32_t>(cells, 0));
  mine_revealed_.assign(boards, std::vector<int>(map_.mines.size(), 0));
  mine_zone_.assign(boards, std::vector<int>(map_.mines.size(), -1));
  black_.assign(cells, 0);
  zone_mask_.assign(cells, 0);
  other_found_last_round_.assign(config_.n_players, false);
}

bool GameState::is_legal(int player, int i) const {
  if (i < 0 || i >= map_.dims.cell_count()) return false;
  if (black(player, i) || revealed(board_of(player), i)) return false;
  return (zone_mask_[i] & ~(1u << player)) == 0;
}

bool GameState::has_open_own_mine(int player) const {
  const int b = board_of(player);
  switch (config_.condition) {
    case Condition::Protection:
      for (const ProtectionZone& z : zones_)
        if (z.active && z.owner == player) return true;
      return false;
    case Condition::Singleton:
      return has_open_any_mine(player);
    case Condition::NoProtection:
      for (std::size_t m = 0; m < map_.mines.size(); ++m) {
        const int r = mine_revealed_[b][m];
        if (r == 0 || r == 3) continue;
        for (HexCoord c : map_.mines[m].cells)
          if ((credited_[b][map_.dims.index(c)] >> player) & 1u) return true;
      }
      return false;
  }
  return false;
}

bool GameState::has_open_any_mine(int player) const {
  const auto& counts = mine_revealed_[board_of(player)];
  return std::any_of(counts.begin(), counts.end(), [](int r) { return r == 1 || r == 2; });
}

std::vector<int> GameState::draw_costs() const {
  if (over()) throw SequencingError("game is over; no costs to draw");
  std::vector<int> costs(config_.n_players);
  const std::uint64_t round = static_cast<std::uint64_t>(round_ + 1);
  for (int p = 0; p < config_.n_players; ++p) {
    Stream rng(config_.seed, Purpose::Cost,
               {static_cast<std::uint64_t>(config_.game_index), round, static_cast<std::uint64_t>(p)});
    costs[p] = config_.cost_support[rng.below(config_.cost_support.size())];
  }
  return costs;
}

void GameState::rebuild_zone_mask(const ProtectionZone& zone) {
  for (HexCoord c : zone.cells) {
    std::uint32_t mask = 0;
    for (const ProtectionZone& z : zones_)
      if (z.active && std::find(z.cells.begin(), z.cells.end(), c) != z.cells.end())
        mask |= 1u << z.owner;
    zone_mask_[map_.dims.index(c)] = mask;
  }
}

namespace {

struct Hit {
  int cell;
  std::uint32_t searchers;
};

}  // namespace

RoundResult GameState::resolve(std::span<const Move> moves) {
  if (over()) throw SequencingError("game is over; no further rounds");
  const int n = config_.n_players;
  if (static_cast<int>(moves.size()) != n)
    throw ProtocolError(static_cast<int>(moves.size()) < n ? static_cast<int>(moves.size()) : n,
                        "expected exactly one move per player");
  const BoardDims dims = map_.dims;
  for (int p = 0; p < n; ++p) {
    if (!moves[p].is_search()) continue;
    const HexCoord c = moves[p].cell;
    if (!dims.contains(c)) throw IllegalMoveError(p, c, "off the board");
    const int i = dims.index(c);
    if (black(p, i)) throw IllegalMoveError(p, c, "already searched");
    if (revealed(board_of(p), i)) throw IllegalMoveError(p, c, "treasure already revealed");
    if (zone_mask_[i] & ~(1u << p)) throw IllegalMoveError(p, c, "inside another player's zone");
  }

  RoundResult res;
  res.round = round_ + 1;
  res.costs = draw_costs();
  res.moves.assign(moves.begin(), moves.end());
  res.payoffs.assign(n, Points{});
  const std::uint64_t round_key = static_cast<std::uint64_t>(res.round);
  const std::uint64_t game_key = static_cast<std::uint64_t>(config_.game_index);

  std::vector<DecisionRecord> recs(n);
  for (int p = 0; p < n; ++p) {
    DecisionRecord& r = recs[p];
    r.condition = config_.condition;
    r.map_id = config_.map_id;
    r.seed = config_.seed;
    r.game_index = config_.game_index;
    r.round = res.round;
    r.player = p;
    r.cost = res.costs[p];
    r.search = moves[p].is_search();
    if (r.search) r.cell = moves[p].cell;
    r.open_own_mine = has_open_own_mine(p);
    r.open_any_mine = has_open_any_mine(p);
    r.other_found_last_round = other_found_last_round_[p];
  }

  const int boards = static_cast<int>(finders_.size());
  std::vector<int> opened_mines;  // (board, mine) pairs flattened, to close zones after
  for (int b = 0; b < boards; ++b) {
    // Group this board's searchers by cell.
    std::vector<Hit> hits;
    for (int p = 0; p < n; ++p) {
      if (!moves[p].is_search() || board_of(p) != b) continue;
      const int i = dims.index(moves[p].cell);
      auto it = std::find_if(hits.begin(), hits.end(), [&](const Hit& h) { return h.cell == i; });
      if (it == hits.end())
        hits.push_back({i, 1u << p});
      else
        it->searchers |= 1u << p;
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.cell < b.cell; });

    auto pay = [&](std::uint32_t who, Points gross, Outcome outcome, int k) {
      for (int p = 0; p < n; ++p)
        if ((who >> p) & 1u) {
          recs[p].outcome = outcome;
          recs[p].reward_gross = gross;
          recs[p].n_cofinders = k;
        }
    };

    std::vector<int> touched;
    for (const Hit& h : hits) {
      const int k = std::popcount(h.searchers);
      if (mine_lookup_[h.cell] < 0) {
        for (int p = 0; p < n; ++p)
          if ((h.searchers >> p) & 1u) {
            black_[h.cell] |= 1u << p;
            recs[p].outcome = Outcome::Fail;
            recs[p].n_cofinders = k;
            res.failures.push_back(dims.coord(h.cell));
            res.failed_by.push_back(p);
          }
        continue;
      }
      const int m = mine_lookup_[h.cell];
      if (std::find(touched.begin(), touched.end(), m) == touched.end()) touched.push_back(m);
    }

    const Points first = Points::whole(config_.first_reward);
    const Points later = Points::whole(config_.subsequent_reward);
    for (int m : touched) {
      std::vector<Hit> mh;
      for (const Hit& h : hits)
        if (mine_lookup_[h.cell] == m) mh.push_back(h);
      const bool fresh = mine_revealed_[b][m] == 0;
      int first_idx = -1;  // index into mh of the cell that opens the mine
      std::uint32_t winner_mask = 0;

      if (fresh && config_.condition == Condition::Protection) {
        // One owner among everyone who hit this mine, on any of its cells.
        std::vector<int> who;
        for (const Hit& h : mh)
          for (int p = 0; p < n; ++p)
            if ((h.searchers >> p) & 1u) who.push_back(p);
        std::sort(who.begin(), who.end());
        int winner = who.front();
        if (who.size() > 1) {
          Stream rng(config_.seed, Purpose::ProtectionTie,
                     {game_key, round_key, static_cast<std::uint64_t>(m)});
          winner = who[rng.below(who.size())];
        }
        winner_mask = 1u << winner;
        for (std::size_t j = 0; j < mh.size(); ++j)
          if (mh[j].searchers & winner_mask) first_idx = static_cast<int>(j);
      } else if (fresh) {
        first_idx = 0;
        if (mh.size() > 1) {
          Stream rng(config_.seed, Purpose::FirstCell,
                     {game_key, round_key, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(b)});
          first_idx = static_cast<int>(rng.below(mh.size()));
        }
      }

      for (std::size_t j = 0; j < mh.size(); ++j) {
        const Hit& h = mh[j];
        const int k = std::popcount(h.searchers);
        const bool opens = static_cast<int>(j) == first_idx;
        std::uint32_t credit = h.searchers;
        if (fresh && config_.condition == Condition::Protection) {
          // Losers pay their cost and reveal their cell but earn nothing.
          pay(h.searchers, Points{}, Outcome::FirstTreasure, k);
          credit = h.searchers & winner_mask;
          if (credit) pay(credit, first, Outcome::FirstTreasure, k);
        } else {
          const Points gross = (opens ? first : later).share(config_.share_for(k));
          pay(h.searchers, gross, opens ? Outcome::FirstTreasure : Outcome::SubsequentTreasure, k);
        }
        finders_[b][h.cell] = h.searchers;
        credited_[b][h.cell] = credit;
        res.reveals.push_back({dims.coord(h.cell), b, h.searchers, credit, opens});
      }
      mine_revealed_[b][m] += static_cast<int>(mh.size());

      if (fresh && config_.condition == Condition::Protection) {
        ProtectionZone z;
        z.mine = m;
        z.owner = std::countr_zero(winner_mask);
        z.anchor = dims.coord(mh[first_idx].cell);
        z.cells.assign(map_.mines[m].cells.begin(), map_.mines[m].cells.end());
        for (HexCoord c : neighbors(z.anchor, dims)) z.cells.push_back(c);
        std::sort(z.cells.begin(), z.cells.end());
        z.cells.erase(std::unique(z.cells.begin(), z.cells.end()), z.cells.end());
        z.active = true;
        mine_zone_[b][m] = static_cast<int>(zones_.size());
        res.zones_opened.push_back(static_cast<int>(zones_.size()));
        zones_.push_back(std::move(z));
        for (HexCoord c : zones_.back().cells) zone_mask_[dims.index(c)] |= winner_mask;
      }
      if (mine_revealed_[b][m] == 3 && mine_zone_[b][m] >= 0 && zones_[mine_zone_[b][m]].active) {
        ProtectionZone& z = zones_[mine_zone_[b][m]];
        z.active = false;
        res.zones_closed.push_back(mine_zone_[b][m]);
        rebuild_zone_mask(z);
      }
    }
  }

  // Who saw someone else find something this round, on their own board.
  std::vector<bool> other_found(n, false);
  for (const Reveal& rv : res.reveals)
    for (int p = 0; p < n; ++p)
      if (board_of(p) == rv.board && (rv.finders & ~(1u << p))) other_found[p] = true;
  other_found_last_round_ = std::move(other_found);

  for (int p = 0; p < n; ++p) {
    DecisionRecord& r = recs[p];
    r.payoff_net = r.search ? r.reward_gross - Points::whole(r.cost) : Points{};
    res.payoffs[p] = r.payoff_net;
    payoffs_[p] += r.payoff_net;
    log_.push_back(r);
  }
  ++round_;
  return res;
}

ViewDelta GameState::delta_for(const RoundResult& result, int player) const {
  ViewDelta d;
  d.round = result.round;
  for (std::size_t j = 0; j < result.failures.size(); ++j)
    if (result.failed_by[j] == player) d.own_failures.push_back(result.failures[j]);
  for (const Reveal& rv : result.reveals)
    if (rv.board == board_of(player)) d.treasures.push_back(rv);
  d.zones_opened = result.zones_opened;
  d.zones_closed = result.zones_closed;
  return d;
}

PlayerView GameState::view(int player) const {
  if (player < 0 || player >= config_.n_players)
    throw std::out_of_range("no player " + std::to_string(player));
  PlayerView v;
  v.player = player;
  v.condition = config_.condition;
  v.dims = map_.dims;
  v.rounds_played = round_;
  v.rounds = config_.rounds;
  v.over = over();
  v.payoff = payoffs_[player];
  const LiveView live(*this, player);
  const int cells = map_.dims.cell_count();
  const int b = board_of(player);
  v.cells.resize(cells);
  for (int i = 0; i < cells; ++i) {
    v.cells[i] = live.color(i);
    if (revealed(b, i)) {
      RevealView rv{map_.dims.coord(i), v.cells[i], {}};
      for (int p = 0; p < config_.n_players; ++p)
        if ((credited_[b][i] >> p) & 1u) rv.finders.push_back(p);
      v.treasures.push_back(std::move(rv));
    }
  }
  for (const ProtectionZone& z : zones_)
    if (z.active) v.zones.push_back({z.cells, z.owner, z.owner == player, true});
  return v;
}

void MoveSet::submit(int player, Move move) {
  if (player < 0 || player >= static_cast<int>(moves_.size()))
    throw ProtocolError(player, "no such player");
  if (present_[player]) throw ProtocolError(player, "move already submitted this round");
  moves_[player] = move;
  present_[player] = true;
}

bool MoveSet::complete() const {
  return std::all_of(present_.begin(), present_.end(), [](bool b) { return b; });
}

std::span<const Move> MoveSet::moves() const {
  for (std::size_t p = 0; p < present_.size(); ++p)
    if (!present_[p]) throw ProtocolError(static_cast<int>(p), "move missing");
  return moves_;
}

GameState new_game(GameConfig config, TreasureMap map) {
  return GameState(std::move(config), std::move(map));
}

std::vector<int> draw_costs(const GameState& state) { return state.draw_costs(); }

std::vector<HexCoord> legal_cells(const GameState& state, int player) {
  std::vector<HexCoord> out;
  const BoardDims dims = state.map().dims;
  for (int i = 0; i < dims.cell_count(); ++i)
    if (state.is_legal(player, i)) out.push_back(dims.coord(i));
  return out;
}

RoundResult resolve_round(GameState& state, std::span<const Move> moves) {
  return state.resolve(moves);
}

PlayerView player_view(const GameState& state, int player) { return state.view(player); }

void play_out(GameState& state, std::span<Agent* const> agents) {
  const int n = state.config().n_players;
  if (static_cast<int>(agents.size()) != n)
    throw ConfigError("need one agent per player");
  if (state.rounds_played() == 0)
    for (int p = 0; p < n; ++p) agents[p]->begin_game(state, p);
  while (!state.over()) {
    const std::vector<int> costs = state.draw_costs();
    std::vector<Move> moves(n);
    for (int p = 0; p < n; ++p) {
      moves[p] = agents[p]->decide(LiveView(state, p), costs[p]);
      if (moves[p].is_search() &&
          (!state.map().dims.contains(moves[p].cell) ||
           !state.is_legal(p, state.map().dims.index(moves[p].cell))))
        throw RunAborted("round " + std::to_string(state.rounds_played() + 1) + ": agent " +
                         std::to_string(p) + " chose illegal cell " + to_string(moves[p].cell));
    }
    const RoundResult res = state.resolve(moves);
    for (int p = 0; p < n; ++p) agents[p]->observe(state.delta_for(res, p));
  }
}

std::vector<DecisionRecord> run_game(const GameConfig& config, const TreasureMap& map,
                                     std::span<Agent* const> agents) {
  GameState state(config, map);
  play_out(state, agents);
  return state.log();
}

std::vector<DecisionRecord> replay_game(const GameConfig& config, const TreasureMap& map,
                                        std::span<const DecisionRecord> records) {
  GameState state(config, map);
  const int n = config.n_players;
  std::vector<Move> moves(n);
  std::vector<bool> seen(n);
  std::size_t i = 0;
  while (i < records.size()) {
    const int round = records[i].round;
    if (round != state.rounds_played() + 1)
      throw SequencingError("log round " + std::to_string(round) + " out of order");
    std::fill(seen.begin(), seen.end(), false);
    for (; i < records.size() && records[i].round == round; ++i) {
      const DecisionRecord& r = records[i];
      if (r.player < 0 || r.player >= n) throw ProtocolError(r.player, "no such player in log");
      if (seen[r.player]) throw ProtocolError(r.player, "two records in one round");
      seen[r.player] = true;
      if (r.search && !r.cell) throw ProtocolError(r.player, "search without a cell");
      moves[r.player] = r.search ? Move::search(*r.cell) : Move::skip();
    }
    for (int p = 0; p < n; ++p)
      if (!seen[p]) throw ProtocolError(p, "record missing in round " + std::to_string(round));
    state.resolve(moves);
  }
  return state.log();
}

}  // namespace treasure

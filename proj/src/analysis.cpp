#include "treasure/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "treasure/decision_log.hpp"

namespace treasure::analysis {

std::string_view to_string(Label l) {
  switch (l) {
    case Label::Initial: return "initial";
    case Label::Sequential: return "sequential";
    case Label::Excluded: return "excluded";
  }
  return "?";
}

namespace {

using GameKey = std::tuple<Condition, int, std::uint64_t, int>;

GameKey key_of(const DecisionRecord& r) { return {r.condition, r.map_id, r.seed, r.game_index}; }

std::string describe(const GameKey& k) {
  return std::string(to_string(std::get<0>(k))) + " map " + std::to_string(std::get<1>(k)) + " seed " +
         std::to_string(std::get<2>(k)) + " game " + std::to_string(std::get<3>(k));
}

bool is_treasure(Outcome o) { return o == Outcome::FirstTreasure || o == Outcome::SubsequentTreasure; }

// Under Protection a tie loser's find is revealed but paid to the owner.
bool credited(const DecisionRecord& r) {
  if (!is_treasure(r.outcome)) return false;
  return !(r.condition == Condition::Protection && r.outcome == Outcome::FirstTreasure &&
           r.reward_gross == Points{});
}

// Games in order of first appearance, each as a (round, player) table of
// indices into the input.
struct Game {
  GameKey key;
  int players = 0;
  int rounds = 0;
  std::vector<std::vector<int>> at;  // [round-1][player]
};

std::vector<Game> split_games(std::span<const DecisionRecord> records) {
  std::map<GameKey, int> index;
  std::vector<Game> games;
  std::vector<std::vector<int>> members;
  for (int i = 0; i < static_cast<int>(records.size()); ++i) {
    const GameKey k = key_of(records[i]);
    auto [it, fresh] = index.emplace(k, static_cast<int>(games.size()));
    if (fresh) {
      games.push_back(Game{k, 0, 0, {}});
      members.emplace_back();
    }
    members[it->second].push_back(i);
  }
  for (std::size_t g = 0; g < games.size(); ++g) {
    Game& game = games[g];
    for (int i : members[g]) {
      const DecisionRecord& r = records[i];
      if (r.round < 1 || r.player < 0 || r.player >= 32)
        throw ReplayError(describe(game.key) + ": bad round or player in a record");
      game.players = std::max(game.players, r.player + 1);
      game.rounds = std::max(game.rounds, r.round);
    }
    game.at.assign(game.rounds, std::vector<int>(game.players, -1));
    for (int i : members[g]) {
      int& slot = game.at[records[i].round - 1][records[i].player];
      if (slot >= 0)
        throw ReplayError(describe(game.key) + ": two records for round " + std::to_string(records[i].round) +
                          " player " + std::to_string(records[i].player));
      slot = i;
    }
    for (int r = 0; r < game.rounds; ++r)
      for (int p = 0; p < game.players; ++p)
        if (game.at[r][p] < 0)
          throw ReplayError(describe(game.key) + ": missing record for round " + std::to_string(r + 1) +
                            " player " + std::to_string(p));
  }
  return games;
}

}  // namespace

std::vector<LabeledRecord> label_contexts(std::span<const DecisionRecord> records, const LabelOptions& options) {
  std::vector<LabeledRecord> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out[i].record = records[i];

  for (const Game& game : split_games(records)) {
    const Condition cond = std::get<0>(game.key);
    std::vector<BeliefState> belief(game.players, BeliefState(options.dims));
    std::vector<std::set<HexCoord>> own(game.players);  // cells credited to the player (Protection)
    const int last_kept = game.rounds - options.exclude_last;

    for (int r = 0; r < game.rounds; ++r) {
      for (int p = 0; p < game.players; ++p) {
        const int idx = game.at[r][p];
        const DecisionRecord& rec = records[idx];
        const BeliefState& b = belief[p];
        std::vector<const MineBelief*> exploitable;
        bool any_open = false;
        for (const MineBelief& m : b.mines()) {
          if (!m.open()) continue;
          any_open = true;
          if (cond == Condition::Protection &&
              std::none_of(m.known.begin(), m.known.end(), [&](HexCoord c) { return own[p].count(c) > 0; }))
            continue;
          exploitable.push_back(&m);
        }
        Label label;
        if (r + 1 > last_kept) {
          label = Label::Excluded;
        } else if (exploitable.empty()) {
          label = options.strict_initial && any_open ? Label::Excluded : Label::Initial;
        } else if (!rec.search) {
          label = Label::Sequential;
        } else {
          // A fresh-cell search while a mine could be exploited is neither
          // context: the footnote rule drops it.
          const bool targeted = rec.cell && std::any_of(exploitable.begin(), exploitable.end(), [&](auto* m) {
                                  return m->posterior(*rec.cell) > 0;
                                });
          label = targeted ? Label::Sequential : Label::Excluded;
        }
        out[idx].context = label;
      }

      // Apply the round's observations.
      for (int p = 0; p < game.players; ++p) {
        const DecisionRecord& rec = records[game.at[r][p]];
        if (rec.outcome == Outcome::Fail && rec.cell) belief[p].add_failure(*rec.cell);
        if (credited(rec) && rec.cell) own[p].insert(*rec.cell);
      }
      for (int q = 0; q < game.players; ++q) {
        const DecisionRecord& rec = records[game.at[r][q]];
        if (!is_treasure(rec.outcome) || !rec.cell) continue;
        for (int p = 0; p < game.players; ++p)
          if (cond != Condition::Singleton || p == q) belief[p].add_treasure(*rec.cell);
      }
      for (int p = 0; p < game.players; ++p) {
        try {
          belief[p].refresh();
        } catch (const BeliefCorruption& e) {
          throw ReplayError(describe(game.key) + ", round " + std::to_string(r + 1) + ": " + e.what());
        }
      }
    }
  }
  return out;
}

std::vector<int> candidate_thresholds(const std::vector<int>& support, bool paper_candidates) {
  std::vector<int> c = support;
  if (!paper_candidates) c.push_back(40);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

double specification_quality(std::span<const Observation> obs, int c) {
  if (obs.empty()) return 0.0;
  int fit = 0;
  for (const Observation& o : obs)
    if ((o.cost >= c && !o.search) || (o.cost < c && o.search)) ++fit;
  return static_cast<double>(fit) / obs.size();
}

std::optional<Fit> fit_threshold(std::span<const Observation> obs, const std::vector<int>& candidates) {
  if (obs.empty() || candidates.empty()) return std::nullopt;
  std::vector<int> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  Fit best{sorted.front(), -1.0};
  for (int c : sorted) {
    const double sq = specification_quality(obs, c);
    if (sq > best.TQ) best = {c, sq};  // strict: ties keep the smaller candidate
  }
  return best;
}

std::vector<ThresholdFit> fit_thresholds(std::span<const LabeledRecord> labeled, const std::vector<int>& candidates) {
  using Key = std::tuple<Condition, std::uint64_t, int, Label>;
  std::map<Key, std::vector<Observation>> groups;
  for (const LabeledRecord& l : labeled) {
    if (l.context == Label::Excluded) continue;
    groups[{l.record.condition, l.record.seed, l.record.player, l.context}].push_back(
        {l.record.cost, l.record.search});
  }
  std::vector<ThresholdFit> out;
  for (const auto& [k, obs] : groups) {
    const auto f = fit_threshold(obs, candidates);
    if (!f) continue;
    out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), f->T, f->TQ,
                   static_cast<int>(obs.size())});
  }
  return out;
}

std::vector<RateRow> search_rate_curves(std::span<const LabeledRecord> labeled) {
  std::map<std::tuple<Condition, Label, int>, RateRow> rows;
  for (const LabeledRecord& l : labeled) {
    if (l.context == Label::Excluded) continue;
    RateRow& row = rows[{l.record.condition, l.context, l.record.cost}];
    row.condition = l.record.condition;
    row.context = l.context;
    row.cost = l.record.cost;
    ++row.n;
    if (l.record.search) ++row.searches;
  }
  std::vector<RateRow> out;
  for (const auto& [k, row] : rows) out.push_back(row);
  return out;
}

ContextRate context_rate(std::span<const LabeledRecord> labeled, Condition condition, Label context) {
  ContextRate r;
  for (const LabeledRecord& l : labeled)
    if (l.record.condition == condition && l.context == context) {
      ++r.n;
      if (l.record.search) ++r.searches;
    }
  return r;
}

std::vector<Efficiency> efficiency_metrics(std::span<const LabeledRecord> labeled) {
  struct Acc {
    Efficiency e;
    std::set<GameKey> games;
    std::set<std::tuple<GameKey, int, HexCoord>> cells;             // game, board, cell
    std::map<std::tuple<GameKey, int, HexCoord, int>, int> per_round;  // ... round -> credited finders
  };
  std::map<Condition, Acc> acc;
  for (const LabeledRecord& l : labeled) {
    const DecisionRecord& r = l.record;
    Acc& a = acc[r.condition];
    a.e.condition = r.condition;
    const GameKey g = key_of(r);
    a.games.insert(g);
    if (!r.search) continue;
    ++a.e.searches;
    a.e.search_cost += r.cost;
    if (!is_treasure(r.outcome) || !r.cell) continue;
    const int board = r.condition == Condition::Singleton ? r.player : 0;
    a.cells.insert({g, board, *r.cell});
    if (credited(r)) ++a.per_round[{g, board, *r.cell, r.round}];
  }
  std::vector<Efficiency> out;
  for (auto& [cond, a] : acc) {
    a.e.games = static_cast<int>(a.games.size());
    a.e.treasures = static_cast<int>(a.cells.size());
    for (const auto& [k, n] : a.per_round)
      if (n >= 2) ++a.e.duplicated;
    if (a.e.treasures > 0) {
      a.e.searches_per_treasure = static_cast<double>(a.e.searches) / a.e.treasures;
      a.e.cost_per_treasure = a.e.search_cost / a.e.treasures;
    }
    out.push_back(a.e);
  }
  return out;
}

Forgone forgone_effect(std::span<const LabeledRecord> labeled, Condition condition) {
  Forgone f;
  for (const LabeledRecord& l : labeled) {
    if (l.record.condition != condition || l.context != Label::Initial) continue;
    ContextRate& r = l.record.other_found_last_round ? f.after_other_success : f.otherwise;
    ++r.n;
    if (l.record.search) ++r.searches;
  }
  if (f.after_other_success.n > 0 && f.otherwise.n > 0)
    f.diff = *f.after_other_success.rate() - *f.otherwise.rate();
  return f;
}

double quantile_inclusive(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * (values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

std::vector<ThresholdSummary> summarize_fits(std::span<const ThresholdFit> fits) {
  std::map<std::pair<Condition, Label>, std::vector<const ThresholdFit*>> groups;
  for (const ThresholdFit& f : fits) groups[{f.condition, f.context}].push_back(&f);
  std::vector<ThresholdSummary> out;
  for (const auto& [k, g] : groups) {
    ThresholdSummary s;
    s.condition = k.first;
    s.context = k.second;
    s.players = static_cast<int>(g.size());
    std::vector<double> t;
    int good = 0;
    for (const ThresholdFit* f : g) {
      t.push_back(f->T);
      if (f->TQ >= 0.8) ++good;
    }
    s.q1 = quantile_inclusive(t, 0.25);
    s.median = quantile_inclusive(t, 0.5);
    s.q3 = quantile_inclusive(t, 0.75);
    s.share_tq_08 = static_cast<double>(good) / g.size();
    out.push_back(s);
  }
  return out;
}

void write_labeled_csv(std::ostream& out, std::span<const LabeledRecord> labeled) {
  out << kLogHeader << ",context\n";
  for (const LabeledRecord& l : labeled) out << format_record(l.record) << ',' << to_string(l.context) << '\n';
}

void write_fits_csv(std::ostream& out, std::span<const ThresholdFit> fits) {
  out << "condition,seed,player,context,T,TQ,n_obs\n";
  for (const ThresholdFit& f : fits)
    out << to_string(f.condition) << ',' << f.seed << ',' << f.player << ',' << to_string(f.context) << ','
        << f.T << ',' << f.TQ << ',' << f.n_obs << '\n';
}

void write_rates_csv(std::ostream& out, std::span<const RateRow> rows) {
  out << "condition,context,cost,searches,n,rate\n";
  for (const RateRow& r : rows)
    out << to_string(r.condition) << ',' << to_string(r.context) << ',' << r.cost << ',' << r.searches << ','
        << r.n << ',' << r.rate() << '\n';
}

namespace {
nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}
nlohmann::ordered_json rate_json(const ContextRate& r) {
  return {{"searches", r.searches}, {"n", r.n}, {"rate", opt(r.rate())}};
}
}  // namespace

nlohmann::ordered_json efficiency_json(std::span<const Efficiency> rows) {
  auto out = nlohmann::ordered_json::array();
  for (const Efficiency& e : rows)
    out.push_back({{"condition", to_string(e.condition)},
                   {"games", e.games},
                   {"searches", e.searches},
                   {"search_cost", e.search_cost},
                   {"treasures", e.treasures},
                   {"duplicated", e.duplicated},
                   {"searches_per_treasure", opt(e.searches_per_treasure)},
                   {"cost_per_treasure", opt(e.cost_per_treasure)}});
  return out;
}

nlohmann::ordered_json forgone_json(const Forgone& f) {
  return {{"after_other_success", rate_json(f.after_other_success)},
          {"otherwise", rate_json(f.otherwise)},
          {"diff", opt(f.diff)}};
}

nlohmann::ordered_json summary_json(std::span<const ThresholdSummary> rows) {
  auto out = nlohmann::ordered_json::array();
  for (const ThresholdSummary& s : rows)
    out.push_back({{"condition", to_string(s.condition)},
                   {"context", to_string(s.context)},
                   {"players", s.players},
                   {"q1", s.q1},
                   {"median", s.median},
                   {"q3", s.q3},
                   {"share_tq_0.8", s.share_tq_08}});
  return out;
}

// ---- synthetic agents ----

namespace {
Stream agent_stream(std::uint64_t seed, int game_index, int player, int round) {
  return Stream(seed, Purpose::AgentChoice,
                {static_cast<std::uint64_t>(game_index), static_cast<std::uint64_t>(player),
                 static_cast<std::uint64_t>(round + 1)});
}
}  // namespace

void PlantedAgent::begin_game(const GameState& state, int player) {
  belief_ = BeliefState(state.map().dims);
  seed_ = state.config().seed;
  game_index_ = state.config().game_index;
  player_ = player;
  other_found_ = false;
}

Move PlantedAgent::decide(const LiveView& view, int) {
  Stream rng = agent_stream(seed_, game_index_, player_, view.round());
  const Context ctx = classify_context(belief_, view);
  double p = ctx == Context::Sequential ? rates_.sequential : rates_.initial;
  if (ctx == Context::Initial && other_found_ && rates_.initial_after_other >= 0) p = rates_.initial_after_other;
  if (!rng.bernoulli(p)) return Move::skip();
  const auto cell = select_cell(belief_, view, ctx, Targeting::Greedy, rng);
  return cell ? Move::search(*cell) : Move::skip();
}

void PlantedAgent::observe(const ViewDelta& delta) {
  belief_ = update_belief(std::move(belief_), delta);
  other_found_ = std::any_of(delta.treasures.begin(), delta.treasures.end(),
                             [&](const Reveal& r) { return (r.finders & ~(1u << player_)) != 0; });
}

void NoisyThresholdAgent::begin_game(const GameState& state, int player) {
  strategy_.validate();
  belief_ = BeliefState(state.map().dims);
  seed_ = state.config().seed;
  game_index_ = state.config().game_index;
  player_ = player;
}

Move NoisyThresholdAgent::decide(const LiveView& view, int cost) {
  Stream rng = agent_stream(seed_, game_index_, player_, view.round());
  const Context ctx = classify_context(belief_, view);
  const int t = ctx == Context::Sequential ? strategy_.sequential_threshold : strategy_.initial_threshold;
  bool search = cost < t;
  if (rng.bernoulli(q_)) search = !search;
  if (!search) return Move::skip();
  const auto cell = select_cell(belief_, view, ctx, Targeting::Greedy, rng);
  return cell ? Move::search(*cell) : Move::skip();
}

void NoisyThresholdAgent::observe(const ViewDelta& delta) { belief_ = update_belief(std::move(belief_), delta); }

std::vector<DecisionRecord> simulate_log(Condition condition, int sessions, std::uint64_t seed,
                                         const std::function<std::unique_ptr<Agent>(int)>& make_agent,
                                         int games_per_session, int rounds) {
  std::vector<DecisionRecord> log;
  for (int s = 0; s < sessions; ++s) {
    const std::uint64_t session_seed = derive_key(seed, Purpose::Fixture, {static_cast<std::uint64_t>(s)});
    for (int g = 1; g <= games_per_session; ++g) {
      GameConfig cfg;
      cfg.condition = condition;
      cfg.rounds = rounds;
      cfg.seed = session_seed;
      cfg.game_index = g;
      cfg.map_id = g;
      const TreasureMap map =
          generate_map(derive_key(session_seed, Purpose::MapLayout, {static_cast<std::uint64_t>(g)}));
      std::vector<std::unique_ptr<Agent>> agents;
      std::vector<Agent*> ptrs;
      for (int p = 0; p < cfg.n_players; ++p) {
        agents.push_back(make_agent(p));
        ptrs.push_back(agents.back().get());
      }
      const auto records = run_game(cfg, map, ptrs);
      log.insert(log.end(), records.begin(), records.end());
    }
  }
  return log;
}

}  // namespace treasure::analysis

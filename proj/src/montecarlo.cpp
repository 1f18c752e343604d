#include "treasure/montecarlo.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <stdexcept>
#include <string>
#include <cmath>
#include <exception>
#include <memory>

#include "treasure/random.hpp"

namespace treasure::mc {

void SweepSpec::validate() const {
  if (reps < 1) throw std::invalid_argument("reps must be at least 1");
  if (grid.empty()) throw std::invalid_argument("threshold grid is empty");
  for (int t : grid)
    if (t < 0 || t > 40) throw std::invalid_argument("grid thresholds must lie in [0, 40]");
  if (maps == MapPolicy::Fixed && !fixed_map) throw std::invalid_argument("fixed map policy without a map");
}

GameStats summarize(const GameState& s) {
  GameStats g;
  const int n = s.config().n_players;
  const BoardDims dims = s.map().dims;
  const int boards = s.config().condition == Condition::Singleton ? n : 1;
  int credited_total = 0;
  for (int b = 0; b < boards; ++b)
    for (const Mine& m : s.map().mines)
      for (HexCoord c : m.cells) {
        const int i = dims.index(c);
        if (!s.revealed(b, i)) continue;
        ++g.treasures_group;
        const int k = std::popcount(s.credited(b, i));
        credited_total += k;
        if (k >= 2) ++g.duplicated;
      }
  g.treasures_player = static_cast<double>(credited_total) / n;
  double total = 0;
  for (int p = 0; p < n; ++p) total += s.payoff(p).value();
  g.payoff = total / n;
  g.player0_payoff = s.payoff(0).value();
  g.failures_by_round.assign(s.config().rounds, 0);
  for (const DecisionRecord& r : s.log()) {
    if (!r.search) continue;
    ++g.searches;
    g.search_cost += r.cost;
    if (r.outcome == Outcome::Fail) {
      ++g.failures;
      ++g.failures_by_round[r.round - 1];
    }
  }
  return g;
}

GameStats play_one(const SweepSpec& spec, const std::vector<Strategy>& seats, std::uint64_t game_seed) {
  GameConfig cfg = spec.base;
  cfg.condition = spec.condition;
  cfg.seed = game_seed;
  cfg.n_players = static_cast<int>(seats.size());
  TreasureMap map = spec.maps == MapPolicy::Fixed
                        ? *spec.fixed_map
                        : generate_map(derive_key(game_seed, Purpose::MapLayout), spec.dims.width,
                                       spec.dims.height, spec.mine_count);
  std::vector<ThresholdAgent> agents;
  agents.reserve(seats.size());
  for (const Strategy& st : seats) agents.emplace_back(st, spec.targeting);
  std::vector<Agent*> ptrs;
  for (auto& a : agents) ptrs.push_back(&a);
  GameState state(std::move(cfg), std::move(map));
  play_out(state, ptrs);
  return summarize(state);
}

namespace {

// Neumaier-compensated running sum.
struct Sum {
  double s = 0, c = 0;
  void add(double v) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

template <typename F>
Estimate estimate(const std::vector<GameStats>& games, std::size_t from, std::size_t count, F field) {
  Sum sum;
  for (std::size_t k = 0; k < count; ++k) sum.add(field(games[from + k]));
  const double mean = sum.value() / count;
  if (count < 2) return {mean, 0.0};
  Sum sq;
  for (std::size_t k = 0; k < count; ++k) {
    const double d = field(games[from + k]) - mean;
    sq.add(d * d);
  }
  return {mean, std::sqrt(sq.value() / (count - 1) / count)};
}

SweepCell aggregate(int initial_t, int sequential_t, const std::vector<GameStats>& games, std::size_t from,
                    std::size_t count) {
  SweepCell c;
  c.initial_t = initial_t;
  c.sequential_t = sequential_t;
  c.reps = static_cast<int>(count);
  c.payoff = estimate(games, from, count, [](const GameStats& g) { return g.payoff; });
  c.treasures_player = estimate(games, from, count, [](const GameStats& g) { return g.treasures_player; });
  c.treasures_group =
      estimate(games, from, count, [](const GameStats& g) { return static_cast<double>(g.treasures_group); });
  c.duplicated = estimate(games, from, count, [](const GameStats& g) { return static_cast<double>(g.duplicated); });
  c.searches = estimate(games, from, count, [](const GameStats& g) { return static_cast<double>(g.searches); });
  Sum searches, cost, found;
  for (std::size_t k = 0; k < count; ++k) {
    const GameStats& g = games[from + k];
    searches.add(g.searches);
    cost.add(g.search_cost);
    found.add(g.treasures_group);
    if (c.failures_by_round.size() < g.failures_by_round.size())
      c.failures_by_round.resize(g.failures_by_round.size(), 0.0);
    for (std::size_t r = 0; r < g.failures_by_round.size(); ++r) c.failures_by_round[r] += g.failures_by_round[r];
  }
  for (double& f : c.failures_by_round) f /= count;
  if (found.value() > 0) {
    c.searches_per_treasure = searches.value() / found.value();
    c.cost_per_treasure = cost.value() / found.value();
  }
  return c;
}

struct Task {
  int cell;
  int rep;
};

std::vector<std::pair<int, int>> cell_list(const SweepSpec& spec) {
  std::vector<std::pair<int, int>> cells;
  for (int i : spec.grid)
    for (int s : spec.grid) cells.emplace_back(i, s);
  return cells;
}

GameStats run_task(const SweepSpec& spec, std::pair<int, int> cell, int rep) {
  const Strategy st{cell.first, cell.second};
  const std::vector<Strategy> seats(spec.base.n_players, st);
  return play_one(spec, seats, rep_seed(spec.seed, cell.first, cell.second, rep));
}

SweepGrid assemble(const SweepSpec& spec, const std::vector<std::pair<int, int>>& cells,
                   const std::vector<GameStats>& games) {
  SweepGrid out;
  out.condition = spec.condition;
  out.grid = spec.grid;
  for (std::size_t k = 0; k < cells.size(); ++k)
    out.cells.push_back(aggregate(cells[k].first, cells[k].second, games, k * spec.reps, spec.reps));
  return out;
}

}  // namespace

const SweepCell& SweepGrid::at(int initial_t, int sequential_t) const {
  for (const SweepCell& c : cells)
    if (c.initial_t == initial_t && c.sequential_t == sequential_t) return c;
  throw std::out_of_range("no sweep cell (" + std::to_string(initial_t) + "," + std::to_string(sequential_t) + ")");
}

std::uint64_t rep_seed(std::uint64_t master, int initial_t, int sequential_t, int rep) {
  return derive_key(master, Purpose::SweepRep,
                    {static_cast<std::uint64_t>(initial_t), static_cast<std::uint64_t>(sequential_t),
                     static_cast<std::uint64_t>(rep)});
}

SweepGrid run_sweep(const SweepSpec& spec) {
  spec.validate();
  const auto cells = cell_list(spec);
  const long total = static_cast<long>(cells.size()) * spec.reps;
  std::vector<GameStats> games(total);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8)
  for (long t = 0; t < total; ++t) {
    try {
      games[t] = run_task(spec, cells[t / spec.reps], static_cast<int>(t % spec.reps));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return assemble(spec, cells, games);
}

SweepGrid run_sweep_serial(const SweepSpec& spec) {
  spec.validate();
  const auto cells = cell_list(spec);
  std::vector<GameStats> games;
  games.reserve(cells.size() * spec.reps);
  for (const auto& cell : cells)
    for (int rep = 0; rep < spec.reps; ++rep) games.push_back(run_task(spec, cell, rep));
  return assemble(spec, cells, games);
}

std::pair<int, int> best_symmetric(const std::vector<SweepCell>& cells) {
  if (cells.empty()) throw std::invalid_argument("empty sweep");
  const SweepCell* best = &cells.front();
  for (const SweepCell& c : cells) {
    const bool better = c.payoff.mean > best->payoff.mean ||
                        (c.payoff.mean == best->payoff.mean &&
                         std::tie(c.initial_t, c.sequential_t) < std::tie(best->initial_t, best->sequential_t));
    if (better) best = &c;
  }
  return {best->initial_t, best->sequential_t};
}

std::pair<int, int> best_symmetric(const SweepGrid& grid) { return best_symmetric(grid.cells); }

std::vector<int> parse_grid(std::string_view text) {
  auto number = [&](std::string_view t) {
    int v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || end != t.data() + t.size() || t.empty())
      throw std::invalid_argument("bad grid value '" + std::string(t) + "'");
    return v;
  };
  std::vector<int> out;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos) throw std::invalid_argument("grid range needs start:stop:step");
    const int start = number(text.substr(0, a));
    const int stop = number(text.substr(a + 1, b - a - 1));
    const int step = number(text.substr(b + 1));
    if (step <= 0 || stop < start) throw std::invalid_argument("grid range must increase with a positive step");
    for (int v = start; v <= stop; v += step) out.push_back(v);
  } else {
    while (!text.empty()) {
      const auto comma = text.find(',');
      out.push_back(number(text.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      text.remove_prefix(comma + 1);
    }
  }
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

std::vector<Strategy> strategy_grid(const std::vector<int>& values) {
  std::vector<Strategy> out;
  for (int i : values)
    for (int s : values) out.push_back({i, s});
  return out;
}

BestResponseReport best_response_check(const SweepSpec& spec, Strategy profile,
                                       const std::vector<Strategy>& deviations) {
  spec.validate();
  if (deviations.empty()) throw std::invalid_argument("no deviations to check");
  const int n = spec.base.n_players;
  const int reps = spec.reps;
  // Slot 0 is the profile itself, the baseline every deviation is paired with.
  std::vector<Strategy> plays{profile};
  for (const Strategy& d : deviations)
    if (!(d == profile)) plays.push_back(d);
  const long total = static_cast<long>(plays.size()) * reps;
  std::vector<double> seat0(total);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8)
  for (long t = 0; t < total; ++t) {
    try {
      std::vector<Strategy> seats(n, profile);
      seats[0] = plays[t / reps];
      const int rep = static_cast<int>(t % reps);
      seat0[t] = play_one(spec, seats,
                          derive_key(spec.seed, Purpose::BestResponse, {static_cast<std::uint64_t>(rep)}))
                     .player0_payoff;
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  auto stats = [&](auto value) {
    Sum sum;
    for (int r = 0; r < reps; ++r) sum.add(value(r));
    const double mean = sum.value() / reps;
    if (reps < 2) return Estimate{mean, 0.0};
    Sum sq;
    for (int r = 0; r < reps; ++r) sq.add((value(r) - mean) * (value(r) - mean));
    return Estimate{mean, std::sqrt(sq.value() / (reps - 1) / reps)};
  };

  BestResponseReport rep;
  rep.profile = profile;
  for (const Strategy& d : deviations) {
    const long slot = std::find(plays.begin(), plays.end(), d) - plays.begin();
    Deviation dev;
    dev.strategy = d;
    dev.payoff = stats([&](int r) { return seat0[slot * reps + r]; });
    dev.gain = stats([&](int r) { return seat0[slot * reps + r] - seat0[r]; });
    rep.deviations.push_back(dev);
  }
  rep.best = rep.deviations.front();
  for (const Deviation& d : rep.deviations)
    if (d.gain.mean > rep.best.gain.mean) rep.best = d;
  rep.approximate_equilibrium = std::none_of(rep.deviations.begin(), rep.deviations.end(), [](const Deviation& d) {
    return d.gain.mean > 2 * d.gain.se && d.gain.mean > 0;
  });
  return rep;
}

EquilibriumSearch equilibrium_candidate(const SweepSpec& spec, Strategy start, int max_steps) {
  EquilibriumSearch out;
  const auto deviations = strategy_grid(spec.grid);
  auto visited = [&](Strategy s) {
    return std::any_of(out.trace.begin(), out.trace.end(), [&](const BestResponseReport& t) { return t.profile == s; });
  };
  // Nearest grid value to v, lower one on ties.
  auto snap = [&](double v) {
    int best = spec.grid.front();
    for (int g : spec.grid)
      if (std::abs(g - v) < std::abs(best - v)) best = g;
    return best;
  };
  Strategy profile = start;
  for (int step = 0; step < max_steps; ++step) {
    out.trace.push_back(best_response_check(spec, profile, deviations));
    const BestResponseReport& r = out.trace.back();
    if (r.approximate_equilibrium) {
      out.candidate = profile;
      out.converged = true;
      return out;
    }
    Strategy next = r.best.strategy;
    if (visited(next)) {
      // Thresholds are strategic substitutes, so the dynamics tend to
      // oscillate around the fixed point; try the profile in between.
      next = {snap((profile.initial_threshold + next.initial_threshold) / 2.0),
              snap((profile.sequential_threshold + next.sequential_threshold) / 2.0)};
      if (visited(next)) break;
    }
    profile = next;
  }
  // No fixed point: report the visited profile with the smallest standardized gain.
  auto score = [](const BestResponseReport& r) {
    return r.best.gain.se > 0 ? r.best.gain.mean / r.best.gain.se : 0.0;
  };
  const auto it = std::min_element(out.trace.begin(), out.trace.end(),
                                   [&](const auto& a, const auto& b) { return score(a) < score(b); });
  out.candidate = it->profile;
  return out;
}

EfficiencyReport efficiency_report(const SweepCell& cell) {
  EfficiencyReport e;
  e.searches_per_treasure = cell.searches_per_treasure;
  e.cost_per_treasure = cell.cost_per_treasure;
  e.duplicated = cell.duplicated.mean;
  e.treasures_group = cell.treasures_group.mean;
  e.failures_by_round = cell.failures_by_round;
  return e;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (i + j) / 2.0 + 1;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman needs paired samples");
  const auto ra = ranks(a), rb = ranks(b);
  const double n = ra.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0 || vb == 0) return std::nan("");
  return cov / std::sqrt(va * vb);
}

void write_sweep_csv(std::ostream& out, const SweepGrid& grid) {
  out << "condition,initial_t,sequential_t,reps,payoff_mean,payoff_se,treasures_player_mean,"
         "treasures_player_se,treasures_group_mean,treasures_group_se,duplicated_mean,duplicated_se,"
         "searches_mean,searches_se,searches_per_treasure,cost_per_treasure\n";
  auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const SweepCell& c : grid.cells) {
    out << to_string(grid.condition) << ',' << c.initial_t << ',' << c.sequential_t << ',' << c.reps << ','
        << c.payoff.mean << ',' << c.payoff.se << ',' << c.treasures_player.mean << ',' << c.treasures_player.se
        << ',' << c.treasures_group.mean << ',' << c.treasures_group.se << ',' << c.duplicated.mean << ','
        << c.duplicated.se << ',' << c.searches.mean << ',' << c.searches.se << ',' << opt(c.searches_per_treasure)
        << ',' << opt(c.cost_per_treasure) << '\n';
  }
}

nlohmann::ordered_json sweep_json(const SweepGrid& grid) {
  nlohmann::ordered_json j;
  j["condition"] = to_string(grid.condition);
  j["grid"] = grid.grid;
  auto est = [](const Estimate& e) { return nlohmann::ordered_json{{"mean", e.mean}, {"se", e.se}}; };
  auto cells = nlohmann::ordered_json::array();
  for (const SweepCell& c : grid.cells) {
    nlohmann::ordered_json jc;
    jc["initial_t"] = c.initial_t;
    jc["sequential_t"] = c.sequential_t;
    jc["reps"] = c.reps;
    jc["payoff"] = est(c.payoff);
    jc["treasures_player"] = est(c.treasures_player);
    jc["treasures_group"] = est(c.treasures_group);
    jc["duplicated"] = est(c.duplicated);
    jc["searches"] = est(c.searches);
    jc["searches_per_treasure"] = c.searches_per_treasure ? nlohmann::ordered_json(*c.searches_per_treasure) : nullptr;
    jc["cost_per_treasure"] = c.cost_per_treasure ? nlohmann::ordered_json(*c.cost_per_treasure) : nullptr;
    jc["failures_by_round"] = c.failures_by_round;
    cells.push_back(std::move(jc));
  }
  j["cells"] = std::move(cells);
  const auto [bi, bs] = best_symmetric(grid);
  j["best_symmetric"] = {bi, bs};
  return j;
}

nlohmann::ordered_json best_response_json(const BestResponseReport& r) {
  nlohmann::ordered_json j;
  j["profile"] = {r.profile.initial_threshold, r.profile.sequential_threshold};
  j["approximate_equilibrium"] = r.approximate_equilibrium;
  j["best"] = {r.best.strategy.initial_threshold, r.best.strategy.sequential_threshold};
  auto devs = nlohmann::ordered_json::array();
  for (const Deviation& d : r.deviations)
    devs.push_back({{"initial_t", d.strategy.initial_threshold},
                    {"sequential_t", d.strategy.sequential_threshold},
                    {"payoff", d.payoff.mean},
                    {"payoff_se", d.payoff.se},
                    {"gain", d.gain.mean},
                    {"gain_se", d.gain.se}});
  j["deviations"] = std::move(devs);
  return j;
}

}  // namespace treasure::mc

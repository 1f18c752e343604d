#include "treasure/agents.hpp"

#include <algorithm>

namespace treasure {

void Strategy::validate() const {
  if (initial_threshold < 0 || initial_threshold > 40 || sequential_threshold < 0 ||
      sequential_threshold > 40)
    throw std::invalid_argument("thresholds must lie in [0, 40]");
}

std::string_view to_string(Context c) { return c == Context::Initial ? "initial" : "sequential"; }

double MineBelief::posterior(HexCoord c) const {
  if (std::binary_search(known.begin(), known.end(), c)) return 1.0;
  if (candidates.empty()) return 0.0;
  int hits = 0;
  for (const Triangle& t : candidates)
    if (std::find(t.begin(), t.end(), c) != t.end()) ++hits;
  return static_cast<double>(hits) / candidates.size();
}

std::vector<std::pair<HexCoord, double>> MineBelief::cell_posteriors() const {
  std::vector<std::pair<HexCoord, int>> counts;
  for (const Triangle& t : candidates)
    for (HexCoord c : t) {
      if (std::binary_search(known.begin(), known.end(), c)) continue;
      auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& e) { return e.first == c; });
      if (it == counts.end())
        counts.emplace_back(c, 1);
      else
        ++it->second;
    }
  std::sort(counts.begin(), counts.end());
  std::vector<std::pair<HexCoord, double>> out;
  out.reserve(counts.size());
  for (auto [c, k] : counts) out.emplace_back(c, static_cast<double>(k) / candidates.size());
  return out;
}

BeliefState::BeliefState(BoardDims dims, double background_p)
    : dims_(dims),
      background_p_(background_p),
      cell_(dims.cell_count(), kUnknown),
      near_(dims.cell_count(), 0) {}

void BeliefState::add_failure(HexCoord c) {
  std::uint8_t& s = cell_[dims_.index(c)];
  if (s == kTreasure) throw BeliefCorruption("failure reported on a revealed treasure " + to_string(c));
  if (s != kBlack) ++blacks_;
  s = kBlack;
}

void BeliefState::add_treasure(HexCoord c) {
  std::uint8_t& s = cell_[dims_.index(c)];
  if (s == kTreasure) return;
  if (s == kBlack) throw BeliefCorruption("treasure reported on a searched-empty cell " + to_string(c));
  s = kTreasure;
  ++revealed_;
  for (HexCoord n : ring(c))
    if (dims_.contains(n)) near_[dims_.index(n)] = 1;

  // Join the adjacent mine, merging if the cell bridges two (which a valid
  // map never produces; refresh() will then flag the contradiction).
  std::vector<int> hits;
  for (std::size_t k = 0; k < mines_.size(); ++k)
    for (HexCoord k_cell : mines_[k].known)
      if (adjacent(k_cell, c)) {
        hits.push_back(static_cast<int>(k));
        break;
      }
  if (hits.empty()) {
    mines_.push_back(MineBelief{{c}, {}});
    return;
  }
  MineBelief& into = mines_[hits[0]];
  into.known.push_back(c);
  for (std::size_t j = hits.size(); j-- > 1;) {
    into.known.insert(into.known.end(), mines_[hits[j]].known.begin(), mines_[hits[j]].known.end());
    mines_.erase(mines_.begin() + hits[j]);
  }
  std::sort(into.known.begin(), into.known.end());
}

int BeliefState::mine_of(HexCoord c) const {
  for (std::size_t k = 0; k < mines_.size(); ++k)
    if (std::binary_search(mines_[k].known.begin(), mines_[k].known.end(), c)) return static_cast<int>(k);
  return -1;
}

bool BeliefState::consistent(const Triangle& t, const MineBelief& self) const {
  for (HexCoord c : t) {
    if (!dims_.contains(c)) return false;
    const bool mine_cell = std::binary_search(self.known.begin(), self.known.end(), c);
    if (mine_cell) continue;
    if (cell_[dims_.index(c)] != kUnknown) return false;
    // Mines never touch, so no placement may border another mine's treasure.
    for (HexCoord n : ring(c)) {
      if (!dims_.contains(n) || cell_[dims_.index(n)] != kTreasure) continue;
      if (!std::binary_search(self.known.begin(), self.known.end(), n)) return false;
    }
  }
  for (HexCoord k : self.known)
    if (std::find(t.begin(), t.end(), k) == t.end()) return false;
  return true;
}

void BeliefState::refresh() {
  for (MineBelief& m : mines_) {
    m.candidates.clear();
    if (!m.open()) {
      if (m.revealed() > 3) throw BeliefCorruption("more than three treasures in one mine");
      continue;
    }
    for (const Triangle& t : triangles_around(m.known.front())) {
      if (!consistent(t, m)) continue;
      Triangle s = t;
      std::sort(s.begin(), s.end());
      if (std::find(m.candidates.begin(), m.candidates.end(), s) == m.candidates.end())
        m.candidates.push_back(s);
    }
    if (m.candidates.empty())
      throw BeliefCorruption("no placement consistent with mine at " + to_string(m.known.front()));
  }
}

double BeliefState::background() const {
  if (total_treasures_ < 0) return background_p_;
  const int unknown = dims_.cell_count() - revealed_ - blacks_;
  if (unknown <= 0) return 0.0;
  // Remaining treasures in open mines are accounted for by their posteriors.
  int pending = 0;
  for (const MineBelief& m : mines_)
    if (m.open()) pending += 3 - m.revealed();
  const int fresh = std::max(0, total_treasures_ - revealed_ - pending);
  return static_cast<double>(fresh) / unknown;
}

double BeliefState::posterior(HexCoord c) const {
  const int i = dims_.index(c);
  if (cell_[i] == kTreasure) return 1.0;
  if (cell_[i] == kBlack) return 0.0;
  for (const MineBelief& m : mines_)
    if (m.open()) {
      const double p = m.posterior(c);
      if (p > 0) return p;
    }
  if (near_[i]) return 0.0;
  return background();
}

BeliefState update_belief(BeliefState belief, const ViewDelta& delta) {
  for (HexCoord c : delta.own_failures) belief.add_failure(c);
  for (const Reveal& r : delta.treasures) belief.add_treasure(r.cell);
  belief.refresh();
  return belief;
}

std::vector<int> exploitable_mines(const BeliefState& belief, const LiveView& view) {
  std::vector<int> out;
  const auto& mines = belief.mines();
  if (view.condition() == Condition::Protection) {
    for (const ProtectionZone& z : view.zones()) {
      if (!z.active || z.owner != view.player()) continue;
      const int k = belief.mine_of(z.anchor);
      if (k >= 0 && mines[k].open() && std::find(out.begin(), out.end(), k) == out.end())
        out.push_back(k);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  for (std::size_t k = 0; k < mines.size(); ++k)
    if (mines[k].open()) out.push_back(static_cast<int>(k));
  return out;
}

Context classify_context(const BeliefState& belief, const LiveView& view) {
  return exploitable_mines(belief, view).empty() ? Context::Initial : Context::Sequential;
}

namespace {

std::optional<HexCoord> pick_fresh(const BeliefState& belief, const LiveView& view, Stream& rng) {
  const BoardDims dims = view.dims();
  const int cells = dims.cell_count();
  auto ok = [&](int i) {
    if (!view.legal(i) || belief.near_treasure(i)) return false;
    const HexCoord c = dims.coord(i);
    for (const MineBelief& m : belief.mines())
      if (m.open() && m.posterior(c) > 0) return false;
    return true;
  };
  // The board is almost always mostly fresh, so a few blind draws suffice.
  for (int tries = 0; tries < 64; ++tries) {
    const int i = static_cast<int>(rng.below(cells));
    if (ok(i)) return dims.coord(i);
  }
  std::vector<int> pool;
  for (int i = 0; i < cells; ++i)
    if (ok(i)) pool.push_back(i);
  if (pool.empty())
    for (int i = 0; i < cells; ++i)
      if (view.legal(i)) pool.push_back(i);
  if (pool.empty()) return std::nullopt;
  return dims.coord(pool[rng.below(pool.size())]);
}

}  // namespace

std::optional<HexCoord> select_cell(const BeliefState& belief, const LiveView& view, Context context,
                                    Targeting targeting, Stream& rng) {
  if (context == Context::Sequential) {
    const BoardDims dims = view.dims();
    // Best legal cell per exploitable mine, then the mine with the best one.
    std::vector<std::vector<std::pair<HexCoord, double>>> options;
    double best = 0.0;
    for (int k : exploitable_mines(belief, view)) {
      auto cells = belief.mines()[k].cell_posteriors();
      std::erase_if(cells, [&](const auto& e) { return !view.legal(dims.index(e.first)); });
      if (cells.empty()) continue;
      double top = 0.0;
      for (const auto& e : cells) top = std::max(top, e.second);
      if (top > best + 1e-12) {
        best = top;
        options.clear();
      }
      if (top >= best - 1e-12) options.push_back(std::move(cells));
    }
    if (!options.empty()) {
      auto& cells = options.size() == 1 ? options.front() : options[rng.below(options.size())];
      if (targeting == Targeting::Greedy)
        std::erase_if(cells, [&](const auto& e) { return e.second < best - 1e-12; });
      return cells[rng.below(cells.size())].first;
    }
  }
  return pick_fresh(belief, view, rng);
}

Move decide(const Strategy& strategy, const BeliefState& belief, const LiveView& view, int cost,
            Targeting targeting, Stream& rng) {
  const Context ctx = classify_context(belief, view);
  const int t = ctx == Context::Sequential ? strategy.sequential_threshold : strategy.initial_threshold;
  if (!(cost < t)) return Move::skip();
  const auto cell = select_cell(belief, view, ctx, targeting, rng);
  return cell ? Move::search(*cell) : Move::skip();
}

void ThresholdAgent::begin_game(const GameState& state, int player) {
  strategy_.validate();
  belief_ = BeliefState(state.map().dims);
  seed_ = state.config().seed;
  game_index_ = state.config().game_index;
  player_ = player;
}

Move ThresholdAgent::decide(const LiveView& view, int cost) {
  Stream rng(seed_, Purpose::AgentChoice,
             {static_cast<std::uint64_t>(game_index_), static_cast<std::uint64_t>(player_),
              static_cast<std::uint64_t>(view.round() + 1)});
  last_context_ = classify_context(belief_, view);
  return treasure::decide(strategy_, belief_, view, cost, targeting_, rng);
}

void ThresholdAgent::observe(const ViewDelta& delta) {
  for (HexCoord c : delta.own_failures) belief_.add_failure(c);
  for (const Reveal& r : delta.treasures) belief_.add_treasure(r.cell);
  belief_.refresh();
}

}  // namespace treasure

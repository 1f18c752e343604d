#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "support.hpp"
#include "treasure/montecarlo.hpp"

using namespace treasure;
using namespace treasure::mc;

namespace {

SweepSpec small(Condition c, int reps = 12, std::vector<int> grid = {10, 20, 30}) {
  SweepSpec s;
  s.condition = c;
  s.grid = std::move(grid);
  s.reps = reps;
  s.seed = 77;
  return s;
}

// Spearman oracle: Pearson correlation of average ranks, O(n^2) ranking.
double spearman_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double w : v) {
        less += w < v[i];
        equal += w == v[i];
      }
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Sweep, ParallelEqualsSerialInEveryCondition) {
  for (Condition c : {Condition::Protection, Condition::NoProtection, Condition::Singleton}) {
    const SweepSpec s = small(c, 6);
    EXPECT_EQ(run_sweep(s), run_sweep_serial(s)) << to_string(c);
  }
}

TEST(Sweep, SameSeedSameNumbers) {
  const SweepSpec s = small(Condition::NoProtection, 5);
  EXPECT_EQ(run_sweep(s), run_sweep(s));
  SweepSpec t = s;
  t.seed = 78;
  EXPECT_NE(run_sweep(s).cells[0].payoff, run_sweep(t).cells[0].payoff);
}

TEST(Sweep, ProtectionNeverDuplicatesTreasure) {
  const SweepGrid g = run_sweep(small(Condition::Protection, 10, {10, 20, 30, 40}));
  for (const SweepCell& c : g.cells) EXPECT_EQ(c.duplicated.mean, 0) << c.initial_t << "," << c.sequential_t;
}

TEST(Sweep, GridLayoutIsRowMajor) {
  const SweepGrid g = run_sweep(small(Condition::Protection, 2));
  ASSERT_EQ(g.cells.size(), 9u);
  for (int i : g.grid)
    for (int s : g.grid) {
      EXPECT_EQ(g.at(i, s).initial_t, i);
      EXPECT_EQ(g.at(i, s).sequential_t, s);
    }
  EXPECT_EQ(&g.at(20, 30), &g.cells[1 * 3 + 2]);
}

TEST(Sweep, SpecValidation) {
  SweepSpec s = small(Condition::Protection);
  s.reps = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small(Condition::Protection);
  s.grid.clear();
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small(Condition::Protection);
  s.grid = {50};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small(Condition::Protection);
  s.maps = MapPolicy::Fixed;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Sweep, FixedMapPolicyUsesTheGivenMap) {
  SweepSpec s = small(Condition::Protection, 3);
  s.maps = MapPolicy::Fixed;
  s.fixed_map = generate_map(5, 20, 12, 6);
  const SweepGrid g = run_sweep(s);
  for (const SweepCell& c : g.cells) EXPECT_LE(c.treasures_group.mean, 18);
}

// Per-game statistics against a recount from the decision log.
TEST(GameSummary, AgreesWithTheLog) {
  for (Condition c : {Condition::Protection, Condition::NoProtection, Condition::Singleton})
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      GameState s(treasure::testing::config(c, 4, 50, seed), generate_map(seed));
      std::vector<ThresholdAgent> agents(4, ThresholdAgent({30, 35}));
      std::vector<Agent*> ptrs;
      for (auto& a : agents) ptrs.push_back(&a);
      play_out(s, ptrs);
      const GameStats g = summarize(s);
      std::map<std::pair<int, HexCoord>, int> credited;
      std::set<std::pair<int, HexCoord>> revealed;
      int searches = 0, failures = 0;
      double cost = 0, payoff = 0;
      for (const DecisionRecord& r : s.log()) {
        payoff += r.payoff_net.value() / 4;
        if (!r.search) continue;
        ++searches;
        cost += r.cost;
        if (r.outcome == Outcome::Fail) ++failures;
        if (r.outcome != Outcome::FirstTreasure && r.outcome != Outcome::SubsequentTreasure) continue;
        const std::pair key{c == Condition::Singleton ? r.player : 0, *r.cell};
        revealed.insert(key);
        const bool tie_loser = c == Condition::Protection && r.outcome == Outcome::FirstTreasure &&
                               r.reward_gross == Points{};
        if (!tie_loser) ++credited[key];
      }
      int dup = 0, total = 0;
      for (auto [k, n] : credited) {
        dup += n >= 2;
        total += n;
      }
      EXPECT_EQ(g.treasures_group, static_cast<int>(revealed.size()));
      EXPECT_EQ(g.duplicated, dup);
      EXPECT_DOUBLE_EQ(g.treasures_player, total / 4.0);
      EXPECT_EQ(g.searches, searches);
      EXPECT_EQ(g.failures, failures);
      EXPECT_DOUBLE_EQ(g.search_cost, cost);
      EXPECT_NEAR(g.payoff, payoff, 1e-9);
    }
}

TEST(BestSymmetric, TiesGoToLowerThresholds) {
  std::vector<SweepCell> cells;
  for (auto [i, s, m] : {std::tuple{10, 30, 5.0}, std::tuple{20, 10, 5.0}, std::tuple{10, 20, 5.0},
                         std::tuple{5, 5, 4.0}}) {
    SweepCell c;
    c.initial_t = i;
    c.sequential_t = s;
    c.payoff.mean = m;
    cells.push_back(c);
  }
  EXPECT_EQ(best_symmetric(cells), std::pair(10, 20));
}

TEST(BestResponse, StayingPutGainsExactlyNothing) {
  SweepSpec s = small(Condition::NoProtection, 8);
  const auto rep = best_response_check(s, {20, 20}, {{20, 20}, {10, 35}, {35, 10}});
  ASSERT_EQ(rep.deviations.size(), 3u);
  EXPECT_EQ(rep.deviations[0].gain.mean, 0);
  EXPECT_EQ(rep.deviations[0].gain.se, 0);
  for (const Deviation& d : rep.deviations) EXPECT_LE(d.gain.mean, rep.best.gain.mean);
}

TEST(BestResponse, StrategyGridIsTheCartesianSquare) {
  const auto g = strategy_grid({5, 10, 15});
  ASSERT_EQ(g.size(), 9u);
  EXPECT_EQ(g[1], (Strategy{5, 10}));
  EXPECT_EQ(g[8], (Strategy{15, 15}));
}

TEST(ParseGrid, RangesAndLists) {
  EXPECT_EQ(parse_grid("5:35:5"), (std::vector<int>{5, 10, 15, 20, 25, 30, 35}));
  EXPECT_EQ(parse_grid("5:20:10"), (std::vector<int>{5, 15}));
  EXPECT_EQ(parse_grid("20"), (std::vector<int>{20}));
  EXPECT_EQ(parse_grid("5,10,20"), (std::vector<int>{5, 10, 20}));
  for (const char* bad : {"", "5:", "5:35:0", "a,b", "35:5:5", "5,,10", "1:2:3:4"})
    EXPECT_THROW(parse_grid(bad), std::invalid_argument) << bad;
}

TEST(Spearman, AgreesWithTheRankOracle) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  Stream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a, b;
    for (int i = 0; i < 20; ++i) {
      a.push_back(static_cast<double>(rng.below(6)));  // plenty of ties
      b.push_back(rng.unit());
    }
    EXPECT_NEAR(spearman(a, b), spearman_oracle(a, b), 1e-12);
  }
}

TEST(RepSeeds, DistinctAcrossCellsAndReps) {
  std::set<std::uint64_t> seen;
  for (int i : {5, 10, 15})
    for (int s : {5, 10, 15})
      for (int r = 0; r < 100; ++r) seen.insert(rep_seed(1, i, s, r));
  EXPECT_EQ(seen.size(), 900u);
}

TEST(Efficiency, RatiosOfTotals) {
  SweepCell c;
  c.searches.mean = 30;
  c.treasures_group.mean = 6;
  c.searches_per_treasure = 5.0;
  c.duplicated.mean = 1.5;
  const EfficiencyReport e = efficiency_report(c);
  EXPECT_EQ(e.searches_per_treasure, 5.0);
  EXPECT_EQ(e.duplicated, 1.5);
  EXPECT_EQ(e.treasures_group, 6);
}

TEST(Sweep, WritersCoverEveryCell) {
  const SweepGrid g = run_sweep(small(Condition::NoProtection, 2));
  std::ostringstream out;
  write_sweep_csv(out, g);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
  EXPECT_EQ(sweep_json(g)["cells"].size(), 9u);
}

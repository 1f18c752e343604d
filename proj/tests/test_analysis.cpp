#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "support.hpp"
#include "treasure/analysis.hpp"
#include "treasure/decision_log.hpp"

using namespace treasure;
using namespace treasure::analysis;
using treasure::testing::config;
using treasure::testing::make_map;
using treasure::testing::skips;

namespace {

std::function<std::unique_ptr<Agent>(int)> threshold_seats(std::vector<Strategy> seats) {
  return [seats](int p) { return std::make_unique<ThresholdAgent>(seats[p % seats.size()]); };
}

std::function<std::unique_ptr<Agent>(int)> planted(PlantedRates r) {
  return [r](int) { return std::make_unique<PlantedAgent>(r); };
}

std::vector<Observation> observations(std::initializer_list<std::pair<int, bool>> l) {
  std::vector<Observation> o;
  for (auto [c, s] : l) o.push_back({c, s});
  return o;
}

}  // namespace

TEST(Fit, SpecificationQualityCountsConsistentDecisions) {
  const auto o = observations({{5, true}, {10, true}, {15, false}, {20, true}, {25, false}});
  EXPECT_DOUBLE_EQ(specification_quality(o, 15), 0.8);
  EXPECT_DOUBLE_EQ(specification_quality(o, 25), 0.8);
  EXPECT_DOUBLE_EQ(specification_quality(o, 40), 0.6);
  // Ties go to the smallest candidate.
  const auto f = fit_threshold(o, candidate_thresholds());
  ASSERT_TRUE(f);
  EXPECT_EQ(f->T, 15);
  EXPECT_DOUBLE_EQ(f->TQ, 0.8);
  EXPECT_FALSE(fit_threshold({}, candidate_thresholds()));
}

TEST(Fit, AlwaysSearchNeedsTheSentinel) {
  const auto o = observations({{5, true}, {20, true}, {35, true}});
  EXPECT_EQ(candidate_thresholds(), (std::vector<int>{5, 10, 15, 20, 25, 30, 35, 40}));
  EXPECT_EQ(candidate_thresholds({5, 10, 15, 20, 25, 30, 35}, true), (std::vector<int>{5, 10, 15, 20, 25, 30, 35}));
  const auto with = fit_threshold(o, candidate_thresholds());
  EXPECT_EQ(with->T, 40);
  EXPECT_DOUBLE_EQ(with->TQ, 1.0);
  const auto without = fit_threshold(o, candidate_thresholds({5, 10, 15, 20, 25, 30, 35}, true));
  EXPECT_EQ(without->T, 25);  // 25..35 all miss only the cost-35 search
  EXPECT_NEAR(without->TQ, 2.0 / 3, 1e-12);
  // Never searching is the smallest candidate.
  EXPECT_EQ(fit_threshold(observations({{5, false}, {35, false}}), candidate_thresholds())->T, 5);
}

TEST(Fit, NoiselessThresholdAgentsAreRecoveredExactly) {
  const std::vector<Strategy> seats{{15, 25}, {20, 20}, {30, 10}, {10, 35}};
  for (Condition c : {Condition::Protection, Condition::NoProtection, Condition::Singleton}) {
    const auto log = simulate_log(c, 6, 41, threshold_seats(seats));
    const auto labeled = label_contexts(log);
    const auto fits = fit_thresholds(labeled);
    // Which costs each participant saw in each context.
    std::map<std::tuple<std::uint64_t, int, Label>, std::set<int>> seen;
    for (const LabeledRecord& r : labeled) seen[{r.record.seed, r.record.player, r.context}].insert(r.record.cost);
    int checked = 0;
    for (const ThresholdFit& f : fits) {
      EXPECT_DOUBLE_EQ(f.TQ, 1.0) << to_string(c);
      const Strategy& st = seats[f.player];
      const int truth = f.context == Label::Initial ? st.initial_threshold : st.sequential_threshold;
      const auto& costs = seen[{f.seed, f.player, f.context}];
      // Identified when both neighbours of the true cut were observed.
      if (costs.count(truth - 5) && costs.count(truth)) {
        EXPECT_EQ(f.T, truth) << to_string(c) << " player " << f.player;
        ++checked;
      }
    }
    EXPECT_GT(checked, 30) << to_string(c);
  }
}

// Ten percent of decisions flipped at random.
TEST(Fit, NoisyAgentsAreRecoveredWithinOneStep) {
  const Strategy truth{20, 25};
  double tq = 0;
  int fits_n = 0, seq_within = 0, seq_n = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto log = simulate_log(Condition::Protection, 1, seed, [&](int) {
      return std::make_unique<NoisyThresholdAgent>(truth, 0.1);
    });
    for (const ThresholdFit& f : fit_thresholds(label_contexts(log))) {
      tq += f.TQ;
      ++fits_n;
      if (f.context == Label::Initial) {
        EXPECT_LE(std::abs(f.T - truth.initial_threshold), 5) << "seed " << seed << " player " << f.player;
      } else {
        ++seq_n;
        seq_within += std::abs(f.T - truth.sequential_threshold) <= 5;
      }
    }
  }
  const double mean = tq / fits_n;
  EXPECT_GE(mean, 0.85);
  EXPECT_LE(mean, 0.95);
  EXPECT_GE(static_cast<double>(seq_within) / seq_n, 0.9);
}

TEST(Labels, AgreeWithTheAgentsOwnContext) {
  for (Condition c : {Condition::Protection, Condition::NoProtection, Condition::Singleton})
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      GameConfig cfg = config(c, 4, 50, seed);
      GameState s(cfg, generate_map(seed));
      std::vector<ThresholdAgent> agents(4, ThresholdAgent({25, 30}));
      for (int p = 0; p < 4; ++p) agents[p].begin_game(s, p);
      std::map<std::pair<int, int>, Context> ctx;
      while (!s.over()) {
        const auto costs = s.draw_costs();
        std::vector<Move> moves;
        for (int p = 0; p < 4; ++p) {
          moves.push_back(agents[p].decide(LiveView(s, p), costs[p]));
          ctx[{s.rounds_played() + 1, p}] = agents[p].last_context();
        }
        const RoundResult r = s.resolve(moves);
        for (int p = 0; p < 4; ++p) agents[p].observe(s.delta_for(r, p));
      }
      for (const LabeledRecord& l : label_contexts(s.log())) {
        const Context agent = ctx.at({l.record.round, l.record.player});
        if (l.record.round > 38) {
          EXPECT_EQ(l.context, Label::Excluded);
        } else if (l.context == Label::Excluded) {
          EXPECT_EQ(agent, Context::Sequential);  // searched outside the exploitable mine
        } else {
          EXPECT_EQ(l.context == Label::Sequential, agent == Context::Sequential)
              << to_string(c) << " round " << l.record.round << " player " << l.record.player;
        }
      }
    }
}

TEST(Labels, StrictInitialDropsTurnsBesideSomeoneElsesMine) {
  const BoardDims dims{12, 10};
  const Triangle mine = triangles_around({5, 5})[0];
  GameState s(config(Condition::Protection, 4, 20), make_map(dims, {mine}));
  auto m = skips(4);
  m[0] = Move::search(mine[0]);
  s.resolve(m);
  for (int r = 1; r < 20; ++r) s.resolve(skips(4));
  LabelOptions strict{12, dims, true};
  const auto loose = label_contexts(s.log(), {12, dims, false});
  const auto tight = label_contexts(s.log(), strict);
  for (std::size_t i = 0; i < loose.size(); ++i) {
    const DecisionRecord& r = loose[i].record;
    if (r.round > 8 || r.round == 1) continue;
    EXPECT_EQ(loose[i].context, r.player == 0 ? Label::Sequential : Label::Initial);
    EXPECT_EQ(tight[i].context, r.player == 0 ? Label::Sequential : Label::Excluded);
  }
}

TEST(Labels, IncompleteGamesAreRejected) {
  auto log = simulate_log(Condition::NoProtection, 1, 3, threshold_seats({{20, 20}}), 1, 10);
  auto gap = log;
  gap.erase(gap.begin() + 5);
  EXPECT_THROW(label_contexts(gap), ReplayError);
  auto dup = log;
  dup.push_back(log.back());
  EXPECT_THROW(label_contexts(dup), ReplayError);
  EXPECT_NO_THROW(label_contexts(log));
}

// Injected context differences come back out of the pipeline.
TEST(Planted, ContextRateDifferencesAreRecovered) {
  for (double diff : {0.05, 0.10, 0.15})
    for (Condition c : {Condition::Protection, Condition::NoProtection}) {
      const PlantedRates r{0.55, 0.55 + diff};
      const auto labeled = label_contexts(simulate_log(c, 60, 9, planted(r)));
      const auto ini = context_rate(labeled, c, Label::Initial).rate();
      const auto seq = context_rate(labeled, c, Label::Sequential).rate();
      ASSERT_TRUE(ini && seq);
      EXPECT_NEAR(*seq - *ini, diff, 0.02) << to_string(c) << " " << diff;
    }
}

TEST(Planted, ProtectionEffectOnSequentialSearchIsRecovered) {
  for (double diff : {0.05, 0.10, 0.15}) {
    const auto prot = label_contexts(simulate_log(Condition::Protection, 60, 4, planted({0.5, 0.6})));
    const auto np = label_contexts(simulate_log(Condition::NoProtection, 60, 5, planted({0.5, 0.6 - diff})));
    const double effect = *context_rate(prot, Condition::Protection, Label::Sequential).rate() -
                          *context_rate(np, Condition::NoProtection, Label::Sequential).rate();
    EXPECT_NEAR(effect, diff, 0.02);
  }
}

TEST(Planted, ForgonePayoffEffectIsRecovered) {
  for (double diff : {0.05, 0.10, 0.15}) {
    const auto labeled = label_contexts(simulate_log(Condition::Protection, 80, 21, planted({0.5, 0.5, 0.5 + diff})));
    const Forgone f = forgone_effect(labeled);
    ASSERT_TRUE(f.diff);
    EXPECT_NEAR(*f.diff, diff, 0.02);
    EXPECT_GT(f.after_other_success.n, 500);
  }
  const auto null = label_contexts(simulate_log(Condition::Protection, 80, 22, planted({0.5, 0.5})));
  EXPECT_NEAR(*forgone_effect(null).diff, 0.0, 0.02);
}

TEST(Rates, CurvesPartitionTheLabeledRecords) {
  const auto labeled = label_contexts(simulate_log(Condition::NoProtection, 3, 1, threshold_seats({{20, 30}})));
  int n = 0, searches = 0;
  for (const LabeledRecord& l : labeled)
    if (l.context != Label::Excluded) {
      ++n;
      searches += l.record.search;
    }
  int rn = 0, rs = 0;
  for (const RateRow& r : search_rate_curves(labeled)) {
    rn += r.n;
    rs += r.searches;
    EXPECT_NE(r.context, Label::Excluded);
    // Noiseless thresholds give step-shaped curves.
    const int t = r.context == Label::Initial ? 20 : 30;
    EXPECT_DOUBLE_EQ(r.rate(), r.cost < t ? 1.0 : 0.0);
  }
  EXPECT_EQ(rn, n);
  EXPECT_EQ(rs, searches);
}

TEST(Efficiency, HandBuiltGame) {
  const BoardDims dims{12, 10};
  const Triangle mine = triangles_around({5, 5})[0];
  GameState s(config(Condition::NoProtection, 4, 3), make_map(dims, {mine}));
  auto m = skips(4);
  m[0] = Move::search(mine[0]);
  m[1] = Move::search(mine[0]);  // shared first find: one duplicated cell
  m[2] = Move::search({0, 0});
  s.resolve(m);
  m = skips(4);
  m[3] = Move::search(mine[1]);
  s.resolve(m);
  s.resolve(skips(4));
  int cost = 0;
  for (const DecisionRecord& r : s.log())
    if (r.search) cost += r.cost;
  const auto e = efficiency_metrics(label_contexts(s.log(), {0, dims, false}));
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].games, 1);
  EXPECT_EQ(e[0].searches, 4);
  EXPECT_EQ(e[0].treasures, 2);
  EXPECT_EQ(e[0].duplicated, 1);
  EXPECT_DOUBLE_EQ(e[0].search_cost, cost);
  EXPECT_DOUBLE_EQ(*e[0].searches_per_treasure, 2.0);
  EXPECT_DOUBLE_EQ(*e[0].cost_per_treasure, cost / 2.0);
}

TEST(Summary, InclusiveQuartiles) {
  EXPECT_DOUBLE_EQ(quantile_inclusive({1, 2, 3, 4}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile_inclusive({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_inclusive({7}, 0.75), 7);
  std::vector<ThresholdFit> fits;
  for (int k = 0; k < 5; ++k) fits.push_back({Condition::Protection, 1, k, Label::Initial, 10 + 5 * k, k < 2 ? 0.7 : 0.9, 30});
  const auto s = summarize_fits(fits);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].players, 5);
  EXPECT_DOUBLE_EQ(s[0].median, 20);
  EXPECT_DOUBLE_EQ(s[0].q1, 15);
  EXPECT_DOUBLE_EQ(s[0].q3, 25);
  EXPECT_DOUBLE_EQ(s[0].share_tq_08, 0.6);
}

TEST(Outputs, WritersEmitHeadersAndRows) {
  const auto labeled = label_contexts(simulate_log(Condition::Protection, 1, 2, threshold_seats({{20, 25}}), 1, 15));
  std::ostringstream a, b, c;
  write_labeled_csv(a, labeled);
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), std::string(kLogHeader) + ",context");
  const auto fits = fit_thresholds(labeled);
  write_fits_csv(b, fits);
  EXPECT_EQ(b.str().substr(0, b.str().find('\n')), "condition,seed,player,context,T,TQ,n_obs");
  write_rates_csv(c, search_rate_curves(labeled));
  EXPECT_EQ(c.str().substr(0, c.str().find('\n')), "condition,context,cost,searches,n,rate");
  EXPECT_TRUE(forgone_json(forgone_effect(labeled)).is_object());
}

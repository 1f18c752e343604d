#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "treasure/agents.hpp"
#include "treasure/decision_log.hpp"
#include "treasure/random.hpp"

using namespace treasure;

namespace {

std::vector<DecisionRecord> sample_log(Condition c, std::uint64_t seed) {
  std::vector<ThresholdAgent> agents(4, ThresholdAgent({25, 30}));
  std::vector<Agent*> ptrs;
  for (auto& a : agents) ptrs.push_back(&a);
  return run_game(treasure::testing::config(c, 4, 50, seed), generate_map(seed), ptrs);
}

int error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_log(in);
  } catch (const LogParseError& e) {
    return e.line;
  }
  return 0;
}

const std::string kGood = "protection,0,1,1,1,0,15,search,4:7,fail,1,0,-15,0,0,0";

}  // namespace

TEST(DecisionLog, RoundTripsWholeGames) {
  for (Condition c : {Condition::Protection, Condition::NoProtection, Condition::Singleton}) {
    const auto log = sample_log(c, 11);
    std::stringstream s;
    write_log(s, log);
    EXPECT_EQ(read_log(s), log);
  }
}

TEST(DecisionLog, FormatsOneRecordPerLine) {
  DecisionRecord r;
  r.condition = Condition::NoProtection;
  r.map_id = 3;
  r.seed = 9;
  r.game_index = 2;
  r.round = 7;
  r.player = 1;
  r.cost = 20;
  r.search = true;
  r.cell = HexCoord{12, 4};
  r.outcome = Outcome::SubsequentTreasure;
  r.n_cofinders = 3;
  r.reward_gross = Points::whole(4);
  r.payoff_net = Points::whole(-16);
  r.open_any_mine = true;
  EXPECT_EQ(format_record(r), "no_protection,3,9,2,7,1,20,search,12:4,subsequent_treasure,3,4,-16,0,1,0");
}

TEST(DecisionLog, ErrorsCarryTheLineNumber) {
  const std::string h = std::string(kLogHeader) + "\n";
  EXPECT_EQ(error_line(""), 1);
  EXPECT_EQ(error_line("nonsense\n"), 1);
  EXPECT_EQ(error_line(h + kGood + "\n"), 0);
  EXPECT_EQ(error_line(h + kGood + "\r\n" + kGood + "\r\n"), 0);
  EXPECT_EQ(error_line(h + kGood + "\n" + "protection,0,1,1,2,0,15,search\n"), 3);
  EXPECT_EQ(error_line(h + "\n" + kGood + "\nprotection,0,1,1,2,0,x,skip,,none,0,0,0,0,0,0\n"), 4);
  EXPECT_EQ(error_line(h + "marsh,0,1,1,1,0,15,skip,,none,0,0,0,0,0,0\n"), 2);
  EXPECT_EQ(error_line(h + "protection,0,1,1,1,0,15,skip,4:7,none,0,0,0,0,0,0\n"), 2);
  EXPECT_EQ(error_line(h + "protection,0,1,1,1,0,15,search,4:7,none,0,0,-15,0,0,0\n"), 2);
  EXPECT_EQ(error_line(h + "protection,0,1,1,1,0,15,search,47,fail,1,0,-15,0,0,0\n"), 2);
  EXPECT_EQ(error_line(h + "protection,0,1,1,1,0,15,search,4:7,fail,1,0.01,-15,0,0,0\n"), 2);
  EXPECT_EQ(error_line(h + "protection,0,1,1,1,0,15,search,4:7,fail,1,0,-15,0,0,yes\n"), 2);
}

TEST(Points, ExactDecimalText) {
  EXPECT_EQ(Points::whole(64).to_string(), "64");
  EXPECT_EQ(Points::twentieths(81).to_string(), "4.05");
  EXPECT_EQ((Points{} - Points::twentieths(630)).to_string(), "-31.5");
  for (std::int64_t u = -2000; u <= 2000; u += 7) {
    const Points p = Points::twentieths(u);
    EXPECT_EQ(Points::parse(p.to_string()), p);
  }
  EXPECT_THROW(Points::parse("0.01"), std::invalid_argument);
  EXPECT_THROW(Points::parse(""), std::invalid_argument);
  EXPECT_EQ(Points::whole(320).share(4), Points::whole(64));
  EXPECT_EQ(Points::whole(80).share(1), Points::whole(4));
}

TEST(Random, MatchesTheReferenceSplitMix64Sequence) {
  Stream s(0);
  EXPECT_EQ(s.next(), 0xe220a8397b1dcdafull);
  EXPECT_EQ(s.next(), 0x6e789e6aa1b965f4ull);
  EXPECT_NE(derive_key(1, Purpose::Cost, {1}), derive_key(1, Purpose::Cost, {2}));
  EXPECT_NE(derive_key(1, Purpose::Cost), derive_key(1, Purpose::MapLayout));
  Stream b(7, Purpose::Cost, {1, 2});
  std::vector<int> hist(7);
  for (int i = 0; i < 70000; ++i) ++hist[b.below(7)];
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
}

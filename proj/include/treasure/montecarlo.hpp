#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "treasure/agents.hpp"
#include "treasure/engine.hpp"
#include "treasure/hexmap.hpp"

namespace treasure::mc {

enum class MapPolicy { FreshPerRep, Fixed };

struct SweepSpec {
  Condition condition = Condition::Protection;
  std::vector<int> grid{5, 10, 15, 20, 25, 30, 35};
  int reps = 2000;
  GameConfig base{};  // condition and seed are overwritten per game
  MapPolicy maps = MapPolicy::FreshPerRep;
  std::optional<TreasureMap> fixed_map;
  BoardDims dims{};
  int mine_count = 35;
  std::uint64_t seed = 1;
  Targeting targeting = Targeting::Greedy;

  void validate() const;
};

// Per-game summary; everything the sweep aggregates.
struct GameStats {
  double payoff = 0;           // mean over the seated players
  double player0_payoff = 0;   // seat 0 only (deviation checks)
  double treasures_player = 0; // mean credited treasures per player
  int treasures_group = 0;     // distinct treasure cells revealed
  int duplicated = 0;          // treasure cells credited to two or more players
  int searches = 0;
  int failures = 0;
  double search_cost = 0;      // summed over searches, in points
  std::vector<int> failures_by_round;

  bool operator==(const GameStats&) const = default;
};

GameStats summarize(const GameState& finished);

// Plays one game with the given per-seat strategies.
GameStats play_one(const SweepSpec& spec, const std::vector<Strategy>& seats, std::uint64_t game_seed);

struct Estimate {
  double mean = 0;
  double se = 0;
  bool operator==(const Estimate&) const = default;
};

struct SweepCell {
  int initial_t = 0;
  int sequential_t = 0;
  int reps = 0;
  Estimate payoff;
  Estimate treasures_player;
  Estimate treasures_group;
  Estimate duplicated;
  Estimate searches;
  // Ratios of totals, not means of ratios; nullopt when nothing was found.
  std::optional<double> searches_per_treasure;
  std::optional<double> cost_per_treasure;
  std::vector<double> failures_by_round;  // mean per game

  bool operator==(const SweepCell&) const = default;
};

struct SweepGrid {
  Condition condition = Condition::Protection;
  std::vector<int> grid;
  std::vector<SweepCell> cells;  // row-major: initial threshold outer, sequential inner

  const SweepCell& at(int initial_t, int sequential_t) const;
  bool operator==(const SweepGrid&) const = default;
};

// Seed of repetition `rep` of grid cell (i, s).
std::uint64_t rep_seed(std::uint64_t master, int initial_t, int sequential_t, int rep);

SweepGrid run_sweep(const SweepSpec& spec);         // OpenMP over (cell, rep)
SweepGrid run_sweep_serial(const SweepSpec& spec);  // reference

// Argmax of mean payoff; ties toward lower thresholds (initial first).
std::pair<int, int> best_symmetric(const SweepGrid& grid);
std::pair<int, int> best_symmetric(const std::vector<SweepCell>& cells);

struct Deviation {
  Strategy strategy;
  Estimate payoff;  // seat 0
  Estimate gain;    // paired difference against staying at the profile
};

struct BestResponseReport {
  Strategy profile;
  std::vector<Deviation> deviations;
  Deviation best;
  bool approximate_equilibrium = false;  // no gain above 2 standard errors
};

// Seats 1..n-1 play `profile`; seat 0 sweeps the deviation grid. All
// deviations share the same games (common random numbers).
BestResponseReport best_response_check(const SweepSpec& spec, Strategy profile,
                                       const std::vector<Strategy>& deviations);

std::vector<Strategy> strategy_grid(const std::vector<int>& values);

// "5:35:5" (inclusive range) or "5,10,20". Throws std::invalid_argument.
std::vector<int> parse_grid(std::string_view text);

struct EquilibriumSearch {
  Strategy candidate;
  bool converged = false;
  std::vector<BestResponseReport> trace;
};

// Best-response dynamics on symmetric profiles, starting at `start`: move
// everyone to seat 0's best deviation while it gains by more than 2 SE.
EquilibriumSearch equilibrium_candidate(const SweepSpec& spec, Strategy start, int max_steps = 8);

struct EfficiencyReport {
  std::optional<double> searches_per_treasure;
  std::optional<double> cost_per_treasure;
  double duplicated = 0;
  double treasures_group = 0;
  std::vector<double> failures_by_round;
};

EfficiencyReport efficiency_report(const SweepCell& cell);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

void write_sweep_csv(std::ostream& out, const SweepGrid& grid);
nlohmann::ordered_json sweep_json(const SweepGrid& grid);
nlohmann::ordered_json best_response_json(const BestResponseReport& report);

}  // namespace treasure::mc

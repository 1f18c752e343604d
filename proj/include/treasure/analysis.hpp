#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "treasure/agents.hpp"
#include "treasure/engine.hpp"

namespace treasure::analysis {

enum class Label { Initial, Sequential, Excluded };
std::string_view to_string(Label l);

struct LabeledRecord {
  DecisionRecord record;
  Label context = Label::Excluded;
};

// The log does not describe a sequence of complete rounds.
class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabelOptions {
  int exclude_last = 12;
  BoardDims dims{};
  // Also exclude turns without an exploitable mine while some other mine is
  // partially revealed (the literal "no partially-discovered mines" reading).
  bool strict_initial = false;
};

// Beliefs are rebuilt from the log alone: treasures are public, failures
// private, so no map is needed. Games are keyed by
// (condition, map_id, seed, game_index); each must hold every player's
// record for rounds 1..R.
std::vector<LabeledRecord> label_contexts(std::span<const DecisionRecord> records,
                                          const LabelOptions& options = {});

struct ThresholdFit {
  Condition condition = Condition::Protection;
  std::uint64_t seed = 0;  // with condition and player, identifies a participant
  int player = 0;
  Label context = Label::Initial;
  int T = 0;
  double TQ = 0;
  int n_obs = 0;
};

struct Observation {
  int cost = 0;
  bool search = false;
};

// Candidate thresholds: the cost support plus the always-search sentinel 40
// unless `paper_candidates`.
std::vector<int> candidate_thresholds(const std::vector<int>& support = {5, 10, 15, 20, 25, 30, 35},
                                      bool paper_candidates = false);
// Share of decisions consistent with "search iff cost < c".
double specification_quality(std::span<const Observation> obs, int c);
struct Fit {
  int T = 0;
  double TQ = 0;
};
// Argmax of specification quality, ties to the smallest candidate; nullopt on
// no observations.
std::optional<Fit> fit_threshold(std::span<const Observation> obs, const std::vector<int>& candidates);

// One fit per participant and non-excluded context.
std::vector<ThresholdFit> fit_thresholds(std::span<const LabeledRecord> labeled,
                                         const std::vector<int>& candidates = candidate_thresholds());

struct RateRow {
  Condition condition = Condition::Protection;
  Label context = Label::Initial;
  int cost = 0;
  int searches = 0;
  int n = 0;
  double rate() const { return n ? static_cast<double>(searches) / n : 0.0; }
};

// Search frequency per condition x context x cost, excluded records dropped.
std::vector<RateRow> search_rate_curves(std::span<const LabeledRecord> labeled);

struct ContextRate {
  int searches = 0;
  int n = 0;
  std::optional<double> rate() const {
    if (n == 0) return std::nullopt;
    return static_cast<double>(searches) / n;
  }
};
ContextRate context_rate(std::span<const LabeledRecord> labeled, Condition condition, Label context);

struct Efficiency {
  Condition condition = Condition::Protection;
  int games = 0;
  int searches = 0;
  double search_cost = 0;
  int treasures = 0;   // distinct treasure cells revealed
  int duplicated = 0;  // treasure cells credited to two or more players in one round
  std::optional<double> searches_per_treasure;
  std::optional<double> cost_per_treasure;
};

// Uses every record, excluded or not: efficiency is a property of whole games.
std::vector<Efficiency> efficiency_metrics(std::span<const LabeledRecord> labeled);

struct Forgone {
  ContextRate after_other_success;
  ContextRate otherwise;
  std::optional<double> diff;
};

// Initial-context search rates split by the other_found_last_round flag.
Forgone forgone_effect(std::span<const LabeledRecord> labeled, Condition condition = Condition::Protection);

struct ThresholdSummary {
  Condition condition = Condition::Protection;
  Label context = Label::Initial;
  int players = 0;
  double q1 = 0, median = 0, q3 = 0;  // inclusive quartiles of T
  double share_tq_08 = 0;             // fraction with TQ >= 0.8
};
std::vector<ThresholdSummary> summarize_fits(std::span<const ThresholdFit> fits);

// Linear interpolation between closest ranks (inclusive method).
double quantile_inclusive(std::vector<double> values, double q);

// ---- outputs ----
void write_labeled_csv(std::ostream& out, std::span<const LabeledRecord> labeled);
void write_fits_csv(std::ostream& out, std::span<const ThresholdFit> fits);
void write_rates_csv(std::ostream& out, std::span<const RateRow> rows);
nlohmann::ordered_json efficiency_json(std::span<const Efficiency> rows);
nlohmann::ordered_json forgone_json(const Forgone& f);
nlohmann::ordered_json summary_json(std::span<const ThresholdSummary> rows);

// ---- synthetic logs with planted behaviour ----

// Searches with a context-dependent probability instead of a threshold;
// targets cells exactly like ThresholdAgent.
struct PlantedRates {
  double initial = 0.5;
  double sequential = 0.5;
  double initial_after_other = -1;  // < 0: same as initial
};

class PlantedAgent : public Agent {
 public:
  explicit PlantedAgent(PlantedRates rates) : rates_(rates) {}
  void begin_game(const GameState& state, int player) override;
  Move decide(const LiveView& view, int cost) override;
  void observe(const ViewDelta& delta) override;

 private:
  PlantedRates rates_;
  BeliefState belief_;
  std::uint64_t seed_ = 0;
  int game_index_ = 0;
  int player_ = 0;
  bool other_found_ = false;
};

// ThresholdAgent whose search/skip decision is flipped with probability q.
class NoisyThresholdAgent : public Agent {
 public:
  NoisyThresholdAgent(Strategy strategy, double q) : strategy_(strategy), q_(q) {}
  void begin_game(const GameState& state, int player) override;
  Move decide(const LiveView& view, int cost) override;
  void observe(const ViewDelta& delta) override;

 private:
  Strategy strategy_;
  double q_;
  BeliefState belief_;
  std::uint64_t seed_ = 0;
  int game_index_ = 0;
  int player_ = 0;
};

// Plays `sessions` sessions of `games_per_session` games each. A session is
// one group: a shared seed, game_index 1..games_per_session, a fresh map per
// game (map_id = game_index). Seats are built by `make_agent(seat)`.
std::vector<DecisionRecord> simulate_log(Condition condition, int sessions, std::uint64_t seed,
                                         const std::function<std::unique_ptr<Agent>(int)>& make_agent,
                                         int games_per_session = 4, int rounds = 50);

}  // namespace treasure::analysis

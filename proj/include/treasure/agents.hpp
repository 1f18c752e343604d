#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "treasure/engine.hpp"
#include "treasure/random.hpp"

namespace treasure {

// Thresholds in points. Search iff cost < threshold, so 40 always searches
// and 0 never does.
struct Strategy {
  int initial_threshold = 0;
  int sequential_threshold = 0;

  void validate() const;
  bool operator==(const Strategy&) const = default;
};

enum class Context { Initial, Sequential };
std::string_view to_string(Context c);

// How a cell is picked inside the targeted mine.
enum class Targeting { Greedy, Uniform };

class BeliefCorruption : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// One mine as seen from outside: the treasures revealed so far and every
// tight triangle still consistent with what the player knows. The triangle
// set is the same information as the "pair of remaining cells" view, just
// keyed by the full placement.
struct MineBelief {
  std::vector<HexCoord> known;       // revealed treasures, sorted
  std::vector<Triangle> candidates;  // consistent placements (empty once closed)

  int revealed() const { return static_cast<int>(known.size()); }
  bool open() const { return revealed() > 0 && revealed() < 3; }
  double posterior(HexCoord c) const;
  // Unrevealed cells with non-zero posterior, sorted, with their posteriors.
  std::vector<std::pair<HexCoord, double>> cell_posteriors() const;
};

class BeliefState {
 public:
  explicit BeliefState(BoardDims dims = {}, double background_p = 0.05);

  // Optional finite-board mode: background recomputed from the remaining
  // treasure count instead of the fixed density.
  void set_finite_aware(int total_treasures) { total_treasures_ = total_treasures; }

  void add_failure(HexCoord c);
  void add_treasure(HexCoord c);
  // Rebuilds every open mine's candidates; throws BeliefCorruption when an
  // open mine has no consistent placement left.
  void refresh();

  BoardDims dims() const { return dims_; }
  const std::vector<MineBelief>& mines() const { return mines_; }
  bool is_black(HexCoord c) const { return cell_[dims_.index(c)] == kBlack; }
  bool is_treasure(HexCoord c) const { return cell_[dims_.index(c)] == kTreasure; }
  bool near_treasure(int cell_index) const { return near_[cell_index] != 0; }
  // Index into mines() of the mine containing revealed cell c, or -1.
  int mine_of(HexCoord c) const;

  double background() const;
  double posterior(HexCoord c) const;

 private:
  static constexpr std::uint8_t kUnknown = 0, kBlack = 1, kTreasure = 2;
  BoardDims dims_;
  double background_p_;
  int total_treasures_ = -1;
  int revealed_ = 0;
  int blacks_ = 0;
  std::vector<std::uint8_t> cell_;
  std::vector<std::uint8_t> near_;
  std::vector<MineBelief> mines_;

  bool consistent(const Triangle& t, const MineBelief& self) const;
};

// Applies one round of observations; pure.
BeliefState update_belief(BeliefState belief, const ViewDelta& delta);

// Indices into belief.mines() the player can exploit right now.
std::vector<int> exploitable_mines(const BeliefState& belief, const LiveView& view);
Context classify_context(const BeliefState& belief, const LiveView& view);

// nullopt means no legal cell: the caller must skip.
std::optional<HexCoord> select_cell(const BeliefState& belief, const LiveView& view, Context context,
                                    Targeting targeting, Stream& rng);

Move decide(const Strategy& strategy, const BeliefState& belief, const LiveView& view, int cost,
            Targeting targeting, Stream& rng);

class ThresholdAgent : public Agent {
 public:
  explicit ThresholdAgent(Strategy strategy, Targeting targeting = Targeting::Greedy)
      : strategy_(strategy), targeting_(targeting) {}

  void begin_game(const GameState& state, int player) override;
  Move decide(const LiveView& view, int cost) override;
  void observe(const ViewDelta& delta) override;

  const BeliefState& belief() const { return belief_; }
  const Strategy& strategy() const { return strategy_; }
  // Context used for the most recent decision.
  Context last_context() const { return last_context_; }

 private:
  Strategy strategy_;
  Targeting targeting_;
  BeliefState belief_;
  std::uint64_t seed_ = 0;
  int game_index_ = 0;
  int player_ = 0;
  Context last_context_ = Context::Initial;
};

class SkipAgent : public Agent {
 public:
  void begin_game(const GameState&, int) override {}
  Move decide(const LiveView&, int) override { return Move::skip(); }
  void observe(const ViewDelta&) override {}
};

}  // namespace treasure

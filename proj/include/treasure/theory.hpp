#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace treasure::theory {

struct Root {
  double x = 0;
  double residual = 0;  // |f(x)|
  int iterations = 0;
};

class BracketError : public std::runtime_error {
 public:
  BracketError(double lo, double hi, double f_lo, double f_hi);
  double lo, hi, f_lo, f_hi;
};

// Bisection on a sign change; runs until the bracket stops shrinking or its
// width drops below tol.
Root bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-13);

// Increasing f with f(0) <= 0: grows hi by doubling until f(hi) > 0, then bisects.
Root bisect_upward(const std::function<double(double)>& f, double hi = 1.0, double tol = 1e-13,
                   int max_doublings = 200);

// ---- abstract research / application model ----

struct CostFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  // Polynomial form alpha * r^beta, when applicable.
  double alpha = 0;
  double beta = 0;
  bool polynomial() const { return beta > 0; }

  static CostFunction power(double alpha, double beta);
};

struct AbstractParams {
  double R_r = 16;
  double R_a = 26;
  int n = 4;
  CostFunction cost = CostFunction::power(1.0, 2.0);

  void validate() const;
};

enum class Regime { Protected, SymmetricEquilibrium };

struct AbstractSolution {
  double r = 0;
  double x = 0;
  Regime regime = Regime::Protected;
  double residual = 0;
};

class UnboundedOptimum : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

AbstractSolution solve_protected_abstract(const AbstractParams& p);
// Only for polynomial costs: r = ((R_r + R_a) / (2 alpha beta))^(1/(beta-1)).
double protected_closed_form(const AbstractParams& p);
AbstractSolution solve_symmetric_equilibrium(const AbstractParams& p);

struct RateComparison {
  bool more_initial_search_with_protection = false;
  bool less_exploitation_with_protection = false;
  double research_threshold = 0;      // n^2 / (n^2 - 2)
  double exploitation_threshold = 0;  // n^2 / (n^2 - n - 1)
  double r_protected = 0;
  double r_symmetric = 0;
};

RateComparison rate_comparisons(const AbstractParams& p);

double evaluate_utility(const AbstractParams& p, const std::vector<double>& r, const std::vector<double>& x,
                        int player);

bool full_exploitation_check(const AbstractSolution& s, const AbstractParams& p);

// ---- concrete game, Protection ----

// Cost distribution used by the stage problems. The default is the
// continuous uniform on [5, 35]; `discrete` switches to the game's actual
// support, where a threshold t means "search at every support cost below t".
struct CostModel {
  double lo = 5;
  double hi = 35;
  std::vector<int> support;  // non-empty => discrete
  bool discrete() const { return !support.empty(); }
  double p_below(double t) const;
  double mean_below(double t) const;

  static CostModel continuous() { return {}; }
  static CostModel game_support() { return {5, 35, {5, 10, 15, 20, 25, 30, 35}}; }
};

struct ProtectionSolution {
  double x = 0;                        // value of one round
  double C = 0;                        // threshold for a first treasure
  std::array<double, 5> thresholds{};  // stage thresholds c1..c5, solved per stage
  std::array<double, 5> v{};           // stage values v1..v5
  double V = 0;                        // outer value at the solution
  double V_closed = 0;                 // (C* - 5)^2 / 60 on the continuous model
  bool converged = false;
  double residual = 0;  // |V(x) - x|
  bool discrete = false;
};

ProtectionSolution solve_game_protection(const CostModel& model = CostModel::continuous(),
                                         int first_reward = 320, int subsequent_reward = 80);

// Stage values of the continuous model in closed form at a given x.
std::array<double, 5> protection_stage_values(double x);

// ---- concrete game, No Protection ----

// Expected gross for a searcher of a cell that holds treasure, with three
// rivals each searching w.p. p and landing on the same cell w.p. q.
double np_expected_gross(double p, double q, int subsequent_reward = 80);

struct ScenarioProbabilities {
  double search = 0;       // rival search probability used by the upper bound (4/7)
  double none_found = 0;   // nobody else finds anything on the player's failed round
  double two_found = 0;
  double one_found = 0;
  double nobody_same = 0;  // no rival finds the player's own treasure
  double third_not = 0;    // third treasure survives given the second was found
  double next_gain = 0;    // information pays off in the following round
};

struct NoProtectionBounds {
  double seq_lower = 0;   // ignoring information value
  double c2 = 0;          // third-treasure equilibrium
  double third_payoff = 0;
  double info_value = 0;  // v1 - v2 at the protection solution
  ScenarioProbabilities probs;
  double info_gain = 0;
  double seq_upper = 0;
  double total_payoff_upper = 0;
  double first_lower = 0;
  double first_upper = 0;
};

double solve_np_sequential_lower();
NoProtectionBounds solve_np_bounds(const ProtectionSolution& protection);
ScenarioProbabilities np_scenarios(double search_probability);
std::pair<double, double> np_first_treasure_bounds(double total_payoff_upper, int first_reward = 320);

// ---- two-stage deterministic game ----

struct TwoStage {
  double c1 = 0, c2 = 0, x = 0;
  double x_numeric = 0;  // fixed point solved from the stage equations
  bool clipped = false;  // R/2 lies beyond the cost support
};

TwoStage two_stage_deterministic(double R, double A);

nlohmann::ordered_json theory_report(const CostModel& model = CostModel::continuous());

}  // namespace treasure::theory

#include "treasure/theory.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace treasure::theory {

BracketError::BracketError(double lo_, double hi_, double f_lo_, double f_hi_)
    : std::runtime_error("no sign change on [" + std::to_string(lo_) + ", " + std::to_string(hi_) +
                         "]: f = " + std::to_string(f_lo_) + ", " + std::to_string(f_hi_)),
      lo(lo_),
      hi(hi_),
      f_lo(f_lo_),
      f_hi(f_hi_) {}

Root bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
  double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0) return {lo, 0, 0};
  if (f_hi == 0) return {hi, 0, 0};
  if ((f_lo < 0) == (f_hi < 0)) throw BracketError(lo, hi, f_lo, f_hi);
  int it = 0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // out of representable midpoints
    const double fm = f(mid);
    ++it;
    if (fm == 0) return {mid, 0, it};
    if ((fm < 0) == (f_lo < 0)) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
    }
  }
  const double x = 0.5 * (lo + hi);
  return {x, std::abs(f(x)), it};
}

Root bisect_upward(const std::function<double(double)>& f, double hi, double tol, int max_doublings) {
  double lo = 0;
  for (int i = 0; i < max_doublings && f(hi) <= 0; ++i) {
    lo = hi;
    hi *= 2;
  }
  if (f(hi) <= 0) throw BracketError(lo, hi, f(lo), f(hi));
  return bisect(f, lo, hi, tol);
}

// ---- abstract model ----

CostFunction CostFunction::power(double alpha, double beta) {
  CostFunction c;
  c.alpha = alpha;
  c.beta = beta;
  c.value = [alpha, beta](double r) { return alpha * std::pow(r, beta); };
  c.derivative = [alpha, beta](double r) { return alpha * beta * std::pow(r, beta - 1); };
  return c;
}

void AbstractParams::validate() const {
  if (!(R_r > 0) || !(R_a >= R_r)) throw std::invalid_argument("need R_a >= R_r > 0");
  if (n < 1) throw std::invalid_argument("need at least one player");
  if (!cost.derivative || !cost.value) throw std::invalid_argument("cost function missing");
  if (cost.polynomial() && (!(cost.alpha > 0) || !(cost.beta > 1)))
    throw std::invalid_argument("polynomial cost needs alpha > 0 and beta > 1");
}

namespace {

// Solves c'(r) = target for r >= 0.
double invert_marginal(const CostFunction& c, double target) {
  if (target <= c.derivative(0)) return 0;
  try {
    return bisect_upward([&](double r) { return c.derivative(r) - target; }, 1.0, 1e-12).x;
  } catch (const BracketError&) {
    throw UnboundedOptimum("marginal cost never reaches " + std::to_string(target));
  }
}

}  // namespace

AbstractSolution solve_protected_abstract(const AbstractParams& p) {
  p.validate();
  const double target = (p.R_r + p.R_a) / 2;
  const double r = invert_marginal(p.cost, target);
  return {r, 1.0, Regime::Protected, std::abs(p.cost.derivative(r) - target)};
}

double protected_closed_form(const AbstractParams& p) {
  if (!p.cost.polynomial()) throw std::invalid_argument("closed form needs a polynomial cost");
  return std::pow((p.R_r + p.R_a) / (2 * p.cost.alpha * p.cost.beta), 1 / (p.cost.beta - 1));
}

AbstractSolution solve_symmetric_equilibrium(const AbstractParams& p) {
  p.validate();
  if (p.n < 2) throw std::invalid_argument("symmetric equilibrium needs n >= 2");
  const double n = p.n;
  const double r = invert_marginal(p.cost, p.R_r + p.R_a / (n * n));
  const double target = (n - 1) * p.R_a / (n * n);
  // x c'(n r x) is strictly increasing in x.
  auto g = [&](double x) { return x * p.cost.derivative(n * r * x) - target; };
  const Root root = bisect_upward(g, 1.0, 1e-12);
  return {r, root.x, Regime::SymmetricEquilibrium,
          std::max(std::abs(p.cost.derivative(r) - (p.R_r + p.R_a / (n * n))), root.residual)};
}

RateComparison rate_comparisons(const AbstractParams& p) {
  if (p.n < 2) throw std::invalid_argument("rate comparison needs n >= 2");
  const double n2 = static_cast<double>(p.n) * p.n;
  RateComparison rc;
  rc.research_threshold = n2 / (n2 - 2);
  rc.exploitation_threshold = n2 / (n2 - p.n - 1);
  const double ratio = p.R_a / p.R_r;
  rc.more_initial_search_with_protection = ratio > rc.research_threshold;
  rc.less_exploitation_with_protection = ratio > rc.exploitation_threshold;
  rc.r_protected = solve_protected_abstract(p).r;
  rc.r_symmetric = solve_symmetric_equilibrium(p).r;
  return rc;
}

double evaluate_utility(const AbstractParams& p, const std::vector<double>& r, const std::vector<double>& x,
                        int i) {
  if (r.size() != x.size() || i < 0 || i >= static_cast<int>(r.size()))
    throw std::invalid_argument("effort profiles must match and contain the player");
  const double K = std::accumulate(r.begin(), r.end(), 0.0);
  const double sx = std::accumulate(x.begin(), x.end(), 0.0);
  const double w = x[i] * K;
  const double a = sx < 1 ? x[i] * K : (x[i] / sx) * K;
  return r[i] * p.R_r + a * p.R_a - p.cost.value(r[i]) - p.cost.value(w);
}

bool full_exploitation_check(const AbstractSolution& s, const AbstractParams& p) {
  return p.n * s.x >= 1.0;
}

// ---- Protection ----

double CostModel::p_below(double t) const {
  if (discrete()) {
    int k = 0;
    for (int c : support)
      if (c < t) ++k;
    return static_cast<double>(k) / support.size();
  }
  return std::clamp((t - lo) / (hi - lo), 0.0, 1.0);
}

double CostModel::mean_below(double t) const {
  if (discrete()) {
    double sum = 0;
    int k = 0;
    for (int c : support)
      if (c < t) {
        sum += c;
        ++k;
      }
    return k ? sum / k : 0.0;
  }
  return (lo + std::clamp(t, lo, hi)) / 2;
}

namespace {

struct Stage {
  double threshold;
  double value;
};

// Best threshold when a search yields expected gross G and every round spent
// waiting costs x:  max_t  G - E[c | c < t] - x / P(c < t).
Stage solve_stage(const CostModel& m, double G, double x) {
  auto objective = [&](double t) { return G - m.mean_below(t) - x / m.p_below(t); };
  if (m.discrete()) {
    Stage best{0, -INFINITY};
    const auto& s = m.support;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double t = k + 1 < s.size() ? s[k + 1] : s.back() + (s.size() > 1 ? s[k] - s[k - 1] : 5);
      const double v = objective(t);
      if (v > best.value) best = {t, v};
    }
    return best;
  }
  if (x <= 0) return {m.lo, G - m.lo};
  // d/dt: -1/2 + x (hi - lo) / (t - lo)^2, decreasing in t.
  auto slope = [&](double t) { return -0.5 + x * (m.hi - m.lo) / ((t - m.lo) * (t - m.lo)); };
  if (slope(m.hi) >= 0) return {m.hi, objective(m.hi)};
  const double t = bisect(slope, m.lo + 1e-12, m.hi, 1e-14).x;
  return {t, objective(t)};
}

// max_t P(c < t) (B - E[c | c < t]).
Stage solve_outer(const CostModel& m, double B) {
  auto objective = [&](double t) { return m.p_below(t) * (B - m.mean_below(t)); };
  if (m.discrete()) {
    Stage best{static_cast<double>(m.support.front()), 0.0};  // never searching is always available
    const auto& s = m.support;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double t = k + 1 < s.size() ? s[k + 1] : s.back() + (s.size() > 1 ? s[k] - s[k - 1] : 5);
      const double v = objective(t);
      if (v > best.value) best = {t, v};
    }
    return best;
  }
  // d/dt: (B - (t + lo)/2)/(hi - lo) - (t - lo)/(2 (hi - lo)), decreasing in t.
  auto slope = [&](double t) { return (B - (t + m.lo) / 2 - (t - m.lo) / 2) / (m.hi - m.lo); };
  if (slope(m.lo) <= 0) return {m.lo, 0.0};
  if (slope(m.hi) >= 0) return {m.hi, objective(m.hi)};
  const double t = bisect(slope, m.lo, m.hi, 1e-14).x;
  return {t, objective(t)};
}

struct Ladder {
  std::array<Stage, 5> stages;
  Stage outer;
};

// Backward induction over the mine states, from one certain cell left to the
// first search after the opening treasure.
Ladder ladder(const CostModel& m, double x, double first, double later) {
  Ladder l;
  auto& s = l.stages;
  s[0] = solve_stage(m, later, x);                                                // certain cell
  s[1] = solve_stage(m, 0.5 * s[0].value + 0.5 * later, x);                       // coin flip
  s[2] = solve_stage(m, later + s[1].value, x);                                   // certain, then flip
  s[3] = solve_stage(m, 0.5 * (later + s[1].value) + 0.5 * s[2].value, x);        // after one miss
  s[4] = solve_stage(m, (later + s[1].value) / 3 + 2.0 / 3 * s[3].value, x);      // fresh anchor
  l.outer = solve_outer(m, 0.05 * (first + s[4].value));
  return l;
}

}  // namespace

std::array<double, 5> protection_stage_values(double x) {
  const double s = std::sqrt(15.0) * std::sqrt(x);
  return {75 - 2 * s, 72.5 - 3 * s, 147.5 - 5 * s, 145 - 6 * s, 142.5 - 7 * s};
}

ProtectionSolution solve_game_protection(const CostModel& model, int first_reward, int subsequent_reward) {
  auto gap = [&](double x) { return ladder(model, x, first_reward, subsequent_reward).outer.value - x; };
  ProtectionSolution sol;
  sol.discrete = model.discrete();
  const Root root = bisect(gap, 0.0, 16.0, 1e-13);
  sol.x = root.x;
  sol.residual = root.residual;
  const Ladder l = ladder(model, sol.x, first_reward, subsequent_reward);
  for (int k = 0; k < 5; ++k) {
    sol.thresholds[k] = l.stages[k].threshold;
    sol.v[k] = l.stages[k].value;
  }
  sol.C = l.outer.threshold;
  sol.V = l.outer.value;
  sol.V_closed = (sol.C - 5) * (sol.C - 5) / 60;
  sol.converged = sol.residual < 1e-9;
  return sol;
}

// ---- No Protection ----

namespace {

double binom(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

double np_expected_gross(double p, double q, int later) {
  // Reward when j rivals share the cell: full, 0.2, 0.05, nothing.
  const double reward[4] = {later * 1.0, later * 0.2, later * 0.05, 0.0};
  double total = 0;
  for (int k = 0; k <= 3; ++k) {
    const double pk = binom(3, k) * std::pow(p, k) * std::pow(1 - p, 3 - k);
    double inner = 0;
    for (int j = 0; j <= k; ++j) inner += binom(k, j) * std::pow(q, j) * std::pow(1 - q, k - j) * reward[j];
    total += pk * inner;
  }
  return total;
}

namespace {

double p_of(double c) { return (c - 5) / 30; }

double np_lower_residual(double c) { return np_expected_gross(p_of(c), 1.0 / 6) / 3 - c; }

}  // namespace

double solve_np_sequential_lower() { return bisect(np_lower_residual, 5, 35, 1e-13).x; }

ScenarioProbabilities np_scenarios(double b) {
  const double a = 1 - b;
  auto term = [&](int k) { return binom(3, k) * std::pow(a, 3 - k) * std::pow(b, k); };
  ScenarioProbabilities s;
  s.search = b;
  for (int k = 1; k <= 3; ++k) s.none_found += term(k) * std::pow(2.0 / 3, k);
  // Two rivals on the two remaining cells: all three searching with one pair
  // split, or exactly two searching and landing on distinct treasure cells.
  s.two_found = b * b * b / 6 + 3 * a * b * b * 2 / 36;
  s.one_found = 1 - s.two_found - s.none_found;
  for (int k = 0; k <= 3; ++k) s.nobody_same += term(k) * std::pow(5.0 / 6, k);
  double found = 0;
  for (int k = 1; k <= 3; ++k) found += term(k) * std::pow(5.0 / 6, k);
  s.third_not = 1 - found;
  s.next_gain = term(1) * 0.25 + term(2) * 0.125 + term(3) * 0.125;
  return s;
}

NoProtectionBounds solve_np_bounds(const ProtectionSolution& protection) {
  NoProtectionBounds b;
  b.seq_lower = solve_np_sequential_lower();
  b.c2 = bisect([](double c) { return np_expected_gross(p_of(c), 0.5) / 2 - c; }, 5, 35, 1e-13).x;
  b.third_payoff = np_expected_gross(p_of(b.c2), 0.5) / 2 - (b.c2 + 5) / 2;
  b.info_value = protection.v[0] - protection.v[1];

  // Rivals search with the lower-bound threshold applied to the real support.
  const int support[] = {5, 10, 15, 20, 25, 30, 35};
  int below = 0;
  for (int c : support)
    if (c < b.seq_lower) ++below;
  b.probs = np_scenarios(below / 7.0);

  const auto& s = b.probs;
  const double I = b.info_value;
  b.info_gain = 2.0 / 3 * (s.none_found * I + s.one_found * I / 3) +
                1.0 / 3 * (s.nobody_same * s.third_not * (b.third_payoff + s.next_gain * I));
  const double gain = b.info_gain;
  b.seq_upper = bisect([&](double c) { return np_lower_residual(c) + gain; }, 5, 35, 1e-13).x;
  b.total_payoff_upper = np_expected_gross(p_of(b.seq_upper), 1.0 / 6) / 3 + gain - (b.seq_upper + 5) / 2;
  std::tie(b.first_lower, b.first_upper) = np_first_treasure_bounds(b.total_payoff_upper);
  return b;
}

std::pair<double, double> np_first_treasure_bounds(double total_payoff_upper, int first_reward) {
  if (total_payoff_upper < 0) throw std::invalid_argument("payoff bound must be non-negative");
  return {0.05 * first_reward, 0.05 * (first_reward + total_payoff_upper)};
}

// ---- two-stage deterministic game ----

TwoStage two_stage_deterministic(double R, double A) {
  if (!(R > 0) || !(A > 0)) throw std::invalid_argument("R and A must be positive");
  TwoStage t;
  t.c1 = t.c2 = R / 2;
  t.x = R * R / (8 * A);
  t.clipped = R / 2 > A;
  // Fixed point of x = p1 (v - c1/2) with c1 = v = R - sqrt(2 A x), p1 = c1/A.
  auto gap = [&](double x) {
    const double v = R - std::sqrt(2 * A * x);
    const double c1 = std::clamp(v, 0.0, A);
    return c1 / A * (v - c1 / 2) - x;
  };
  t.x_numeric = bisect(gap, 0, R * R / (2 * A), 1e-14).x;
  return t;
}

nlohmann::ordered_json theory_report(const CostModel& model) {
  nlohmann::ordered_json j;
  const ProtectionSolution p = solve_game_protection(model);
  j["protection"] = {{"x", p.x},
                     {"C", p.C},
                     {"v", p.v},
                     {"stage_thresholds", p.thresholds},
                     {"residual", p.residual},
                     {"discrete_costs", p.discrete}};
  const ProtectionSolution pc = model.discrete() ? solve_game_protection() : p;
  const NoProtectionBounds np = solve_np_bounds(pc);
  j["no_protection"] = {{"sequential_lower", np.seq_lower},
                        {"third_treasure_threshold", np.c2},
                        {"third_treasure_payoff", np.third_payoff},
                        {"information_value", np.info_value},
                        {"information_gain", np.info_gain},
                        {"sequential_upper", np.seq_upper},
                        {"total_payoff_upper", np.total_payoff_upper},
                        {"first_lower", np.first_lower},
                        {"first_upper", np.first_upper},
                        {"scenarios",
                         {{"search", np.probs.search},
                          {"none_found", np.probs.none_found},
                          {"one_found", np.probs.one_found},
                          {"two_found", np.probs.two_found},
                          {"nobody_same", np.probs.nobody_same},
                          {"third_not", np.probs.third_not},
                          {"next_gain", np.probs.next_gain}}}};
  AbstractParams ap;
  const AbstractSolution prot = solve_protected_abstract(ap);
  const AbstractSolution sym = solve_symmetric_equilibrium(ap);
  const RateComparison rc = rate_comparisons(ap);
  j["abstract"] = {{"R_r", ap.R_r},
                   {"R_a", ap.R_a},
                   {"n", ap.n},
                   {"alpha", ap.cost.alpha},
                   {"beta", ap.cost.beta},
                   {"protected", {{"r", prot.r}, {"x", prot.x}}},
                   {"symmetric", {{"r", sym.r}, {"x", sym.x}, {"full_exploitation", full_exploitation_check(sym, ap)}}},
                   {"more_initial_search_with_protection", rc.more_initial_search_with_protection},
                   {"less_exploitation_with_protection", rc.less_exploitation_with_protection}};
  const TwoStage ts = two_stage_deterministic(100, 100);
  j["two_stage"] = {{"R", 100}, {"A", 100}, {"c1", ts.c1}, {"c2", ts.c2}, {"x", ts.x}};
  return j;
}

}  // namespace treasure::theory

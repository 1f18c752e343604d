#include "cli.hpp"

#include <omp.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "treasure/analysis.hpp"
#include "treasure/decision_log.hpp"
#include "treasure/hexmap.hpp"
#include "treasure/http_server.hpp"
#include "treasure/montecarlo.hpp"
#include "treasure/session.hpp"
#include "treasure/theory.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace treasure::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

// Bad user input that passed option parsing (exit 2).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_root() {
  const char* env = std::getenv("TREASURE_OUT");
  return env && *env ? fs::path(env) : fs::path("out");
}

// Fills options the user did not pass from the JSON config file: either a
// key at the top level or under the subcommand's name. Flags win.
class ConfigLayer {
 public:
  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path);
    try {
      json_ = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw InputError("config file " + path + ": " + e.what());
    }
    if (!json_.is_object()) throw InputError("config file must hold a JSON object");
  }

  template <typename T>
  void apply(CLI::App* sub, const std::string& flag, T& value) {
    const CLI::Option* opt = sub->get_option("--" + flag);
    if (opt->count() > 0 || json_.is_null()) return;
    std::string key = flag;
    std::replace(key.begin(), key.end(), '-', '_');
    const nlohmann::json* src = nullptr;
    const std::string scope = sub->get_name();
    if (json_.contains(scope) && json_[scope].is_object()) {
      if (json_[scope].contains(key)) src = &json_[scope][key];
      else if (json_[scope].contains(flag)) src = &json_[scope][flag];
    }
    if (!src && json_.contains(key)) src = &json_[key];
    if (!src && json_.contains(flag)) src = &json_[flag];
    if (!src) return;
    try {
      value = src->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError("config key " + key + ": " + e.what());
    }
  }

 private:
  nlohmann::json json_;
};

struct Manifest {
  std::string command;
  ojson config = ojson::object();
  ojson seeds = ojson::object();
  ojson outputs = ojson::array();
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
  std::string started_utc;

  explicit Manifest(std::string cmd) : command(std::move(cmd)) {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    started_utc = buf;
  }

  void write(const fs::path& dir) const {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    ojson j{{"command", command},
            {"tool_version", kVersion},
            {"config", config},
            {"seeds", seeds},
            {"outputs", outputs},
            {"started", started_utc},
            {"wall_clock_seconds", secs}};
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

template <typename F>
void write_file(const fs::path& path, F body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Condition condition_arg(const std::string& text) {
  try {
    return parse_condition(text);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

// ---- genmap ----

struct GenmapArgs {
  std::uint64_t seed = 1;
  int width = 70;
  int height = 30;
  int mines = 35;
  std::string out;
};

int cmd_genmap(const GenmapArgs& a) {
  Manifest m("genmap");
  m.config = {{"seed", a.seed}, {"width", a.width}, {"height", a.height}, {"mines", a.mines}};
  m.seeds = {{"map", a.seed}};
  if (a.width <= 0 || a.height <= 0) throw InputError("width and height must be positive");
  if (a.mines < 0) throw InputError("mines must be non-negative");
  const fs::path out = a.out.empty() ? output_root() / "genmap" / ("map-" + std::to_string(a.seed) + ".json")
                                     : fs::path(a.out);
  const TreasureMap map = generate_map(a.seed, a.width, a.height, a.mines);
  const auto violations = validate_map(map);
  const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  ensure_dir(dir);
  write_file(out, [&](std::ostream& o) { o << serialize_map(map) << '\n'; });
  m.outputs.push_back(out.string());
  m.write(dir);
  std::printf("map        %dx%d, seed %llu\n", map.dims.width, map.dims.height,
              static_cast<unsigned long long>(map.seed));
  std::printf("mines      %zu (%d treasures)\n", map.mines.size(), map.treasure_count());
  std::printf("density    %.4f\n", map.density());
  std::printf("valid      %s\n", violations.empty() ? "yes" : "NO");
  for (const Violation& v : violations)
    std::printf("  %s mine %d: %s\n", std::string(to_string(v.kind)).c_str(), v.mine_id, v.detail.c_str());
  std::printf("written    %s\n", out.string().c_str());
  return violations.empty() ? kOk : kRuntimeFailure;
}

// ---- solve ----

struct SolveArgs {
  std::string model = "all";
  double Rr = 16, Ra = 26, alpha = 1, beta = 2;
  int n = 4;
  double R = 100, A = 100;
  bool discrete = false;
  std::string out;
};

ojson solve_abstract(const SolveArgs& a) {
  theory::AbstractParams p;
  p.R_r = a.Rr;
  p.R_a = a.Ra;
  p.n = a.n;
  p.cost = theory::CostFunction::power(a.alpha, a.beta);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  const auto prot = theory::solve_protected_abstract(p);
  const auto sym = theory::solve_symmetric_equilibrium(p);
  const auto rc = theory::rate_comparisons(p);
  ojson j{{"R_r", p.R_r}, {"R_a", p.R_a}, {"n", p.n}, {"alpha", a.alpha}, {"beta", a.beta}};
  j["protected"] = {{"r", prot.r}, {"x", prot.x}, {"residual", prot.residual}};
  if (p.cost.polynomial()) j["protected"]["r_closed_form"] = theory::protected_closed_form(p);
  j["symmetric"] = {{"r", sym.r}, {"x", sym.x}, {"residual", sym.residual},
                    {"full_exploitation", theory::full_exploitation_check(sym, p)}};
  j["two_alpha_r0"] = 2 * a.alpha * prot.r;
  j["two_alpha_r"] = 2 * a.alpha * sym.r;
  j["initial_effort_ratio"] = prot.r / sym.r;
  j["more_initial_search_with_protection"] = rc.more_initial_search_with_protection;
  j["less_exploitation_with_protection"] = rc.less_exploitation_with_protection;
  return j;
}

ojson solve_game(bool discrete) {
  const auto model = discrete ? theory::CostModel::game_support() : theory::CostModel::continuous();
  const auto s = theory::solve_game_protection(model);
  return {{"x", s.x},         {"C", s.C},
          {"v", s.v},         {"stage_thresholds", s.thresholds},
          {"V", s.V},         {"V_closed", s.V_closed},
          {"residual", s.residual}, {"converged", s.converged},
          {"discrete_costs", s.discrete}};
}

ojson solve_bounds() {
  const auto np = theory::solve_np_bounds(theory::solve_game_protection());
  return {{"sequential_lower", np.seq_lower},
          {"third_treasure_threshold", np.c2},
          {"third_treasure_payoff", np.third_payoff},
          {"information_value", np.info_value},
          {"information_gain", np.info_gain},
          {"sequential_upper", np.seq_upper},
          {"total_payoff_upper", np.total_payoff_upper},
          {"first_lower", np.first_lower},
          {"first_upper", np.first_upper}};
}

int cmd_solve(const SolveArgs& a) {
  ojson j;
  if (a.model == "abstract") {
    j = solve_abstract(a);
  } else if (a.model == "game") {
    j = solve_game(a.discrete);
  } else if (a.model == "bounds") {
    if (a.discrete) throw InputError("--discrete applies to --model game only");
    j = solve_bounds();
  } else if (a.model == "two-stage") {
    if (!(a.R > 0) || !(a.A > 0)) throw InputError("--R and --A must be positive");
    const auto t = theory::two_stage_deterministic(a.R, a.A);
    j = {{"R", a.R}, {"A", a.A}, {"c1", t.c1}, {"c2", t.c2}, {"x", t.x}, {"x_numeric", t.x_numeric},
         {"clipped", t.clipped}};
  } else if (a.model == "all") {
    j = theory::theory_report(a.discrete ? theory::CostModel::game_support() : theory::CostModel::continuous());
  } else {
    throw InputError("unknown model " + a.model);
  }
  std::cout << j.dump(2) << '\n';
  if (!a.out.empty()) {
    const fs::path out(a.out);
    const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
    ensure_dir(dir);
    write_file(out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    Manifest m("solve");
    m.config = {{"model", a.model}, {"Rr", a.Rr}, {"Ra", a.Ra}, {"n", a.n}, {"alpha", a.alpha},
                {"beta", a.beta}, {"R", a.R}, {"A", a.A}, {"discrete", a.discrete}};
    m.outputs.push_back(out.string());
    m.write(dir);
  }
  return kOk;
}

// ---- sweep ----

struct SweepArgs {
  std::string condition = "protection";
  int reps = 2000;
  std::string grid = "5:35:5";
  std::uint64_t seed = 1;
  std::string out;
  int jobs = 0;
  bool serial = false;
  bool best_response = false;
  std::string targeting = "greedy";
  std::string map;  // fixed map file; fresh map per repetition otherwise
};

void print_grid(const mc::SweepGrid& g) {
  std::printf("mean payoff per player (rows: initial threshold, columns: sequential)\n%6s", "");
  for (int s : g.grid) std::printf("%9d", s);
  std::printf("\n");
  for (int i : g.grid) {
    std::printf("%6d", i);
    for (int s : g.grid) std::printf("%9.1f", g.at(i, s).payoff.mean);
    std::printf("\n");
  }
}

int cmd_sweep(const SweepArgs& a) {
  mc::SweepSpec spec;
  spec.condition = condition_arg(a.condition);
  spec.reps = a.reps;
  spec.seed = a.seed;
  try {
    spec.grid = mc::parse_grid(a.grid);
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (a.targeting == "uniform") spec.targeting = Targeting::Uniform;
  else if (a.targeting != "greedy") throw InputError("targeting must be greedy or uniform");
  if (!a.map.empty()) {
    std::ifstream in(a.map);
    if (!in) throw InputError("cannot open map " + a.map);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      spec.fixed_map = parse_map(ss.str());
    } catch (const MapParseError& e) {
      throw InputError(e.what());
    }
    spec.maps = mc::MapPolicy::Fixed;
    spec.dims = spec.fixed_map->dims;
  }
  if (a.jobs < 0) throw InputError("--jobs must be non-negative");
  if (a.jobs > 0) omp_set_num_threads(a.jobs);

  Manifest m("sweep");
  m.config = {{"condition", to_string(spec.condition)}, {"reps", spec.reps}, {"grid", spec.grid},
              {"seed", spec.seed}, {"jobs", a.jobs}, {"serial", a.serial}, {"best_response", a.best_response},
              {"targeting", a.targeting}, {"map", a.map.empty() ? ojson(nullptr) : ojson(a.map)}};
  m.seeds = {{"master", spec.seed}};
  const fs::path dir = a.out.empty() ? output_root() / "sweep" : fs::path(a.out);
  ensure_dir(dir);

  const mc::SweepGrid grid = a.serial ? mc::run_sweep_serial(spec) : mc::run_sweep(spec);
  write_file(dir / "sweep.csv", [&](std::ostream& o) { mc::write_sweep_csv(o, grid); });
  write_file(dir / "sweep.json", [&](std::ostream& o) { o << mc::sweep_json(grid).dump(2) << '\n'; });
  m.outputs.push_back((dir / "sweep.csv").string());
  m.outputs.push_back((dir / "sweep.json").string());

  print_grid(grid);
  const auto [bi, bs] = mc::best_symmetric(grid);
  std::printf("symmetric argmax: (%d, %d), payoff %.2f\n", bi, bs, grid.at(bi, bs).payoff.mean);

  if (a.best_response) {
    const auto search = mc::equilibrium_candidate(spec, Strategy{bi, bs});
    ojson trace = ojson::array();
    for (const auto& r : search.trace) {
      trace.push_back(mc::best_response_json(r));
      std::printf("best response at (%d, %d): best deviation (%d, %d) gain %.2f (se %.2f)%s\n",
                  r.profile.initial_threshold, r.profile.sequential_threshold, r.best.strategy.initial_threshold,
                  r.best.strategy.sequential_threshold, r.best.gain.mean, r.best.gain.se,
                  r.approximate_equilibrium ? ", no profitable deviation" : "");
    }
    const ojson eq{{"start", {bi, bs}},
                   {"candidate", {search.candidate.initial_threshold, search.candidate.sequential_threshold}},
                   {"converged", search.converged},
                   {"trace", trace}};
    write_file(dir / "equilibrium.json", [&](std::ostream& o) { o << eq.dump(2) << '\n'; });
    m.outputs.push_back((dir / "equilibrium.json").string());
    m.seeds["best_response"] = "derived per repetition from master";
    std::printf("equilibrium candidate: (%d, %d)%s\n", search.candidate.initial_threshold,
                search.candidate.sequential_threshold, search.converged ? "" : " (no fixed point found)");
  }
  m.write(dir);
  std::printf("written    %s\n", dir.string().c_str());
  return kOk;
}

// ---- analyze ----

struct AnalyzeArgs {
  std::string log;
  int exclude_last = 12;
  std::string out;
  bool strict_initial = false;
  bool paper_candidates = false;
  std::string condition;  // filter
  int width = 70, height = 30;
};

bool blank_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open log " + path);
  char c;
  while (in.get(c))
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

int cmd_analyze(const AnalyzeArgs& a) {
  if (a.log.empty()) throw InputError("--log is required");
  if (a.exclude_last < 0) throw InputError("--exclude-last must be non-negative");
  std::vector<DecisionRecord> records;
  if (!blank_file(a.log)) {
    try {
      records = read_log_file(a.log);
    } catch (const LogParseError& e) {
      throw InputError(a.log + ":" + std::to_string(e.line) + ": " + e.what());
    }
  }
  if (!a.condition.empty()) {
    const Condition keep = condition_arg(a.condition);
    std::erase_if(records, [&](const DecisionRecord& r) { return r.condition != keep; });
  }
  analysis::LabelOptions opt;
  opt.exclude_last = a.exclude_last;
  opt.strict_initial = a.strict_initial;
  opt.dims = {a.width, a.height};
  std::vector<analysis::LabeledRecord> labeled;
  try {
    labeled = analysis::label_contexts(records, opt);
  } catch (const analysis::ReplayError& e) {
    throw InputError(e.what());
  }
  const auto fits = analysis::fit_thresholds(
      labeled, analysis::candidate_thresholds({5, 10, 15, 20, 25, 30, 35}, a.paper_candidates));
  const auto rates = analysis::search_rate_curves(labeled);
  const auto eff = analysis::efficiency_metrics(labeled);
  const auto summary = analysis::summarize_fits(fits);
  ojson forgone = ojson::object();
  for (Condition c : {Condition::Protection, Condition::NoProtection, Condition::Singleton})
    if (std::any_of(records.begin(), records.end(), [&](const DecisionRecord& r) { return r.condition == c; }))
      forgone[std::string(to_string(c))] = analysis::forgone_json(analysis::forgone_effect(labeled, c));

  const fs::path dir = a.out.empty() ? output_root() / "analyze" : fs::path(a.out);
  ensure_dir(dir);
  Manifest m("analyze");
  m.config = {{"log", a.log}, {"exclude_last", a.exclude_last}, {"strict_initial", a.strict_initial},
              {"paper_candidates", a.paper_candidates},
              {"condition", a.condition.empty() ? ojson(nullptr) : ojson(a.condition)},
              {"width", a.width}, {"height", a.height}};
  write_file(dir / "labeled.csv", [&](std::ostream& o) { analysis::write_labeled_csv(o, labeled); });
  write_file(dir / "fits.csv", [&](std::ostream& o) { analysis::write_fits_csv(o, fits); });
  write_file(dir / "rates.csv", [&](std::ostream& o) { analysis::write_rates_csv(o, rates); });
  write_file(dir / "efficiency.json", [&](std::ostream& o) { o << analysis::efficiency_json(eff).dump(2) << '\n'; });
  write_file(dir / "forgone.json", [&](std::ostream& o) { o << forgone.dump(2) << '\n'; });
  write_file(dir / "thresholds.json", [&](std::ostream& o) { o << analysis::summary_json(summary).dump(2) << '\n'; });
  for (const char* f : {"labeled.csv", "fits.csv", "rates.csv", "efficiency.json", "forgone.json", "thresholds.json"})
    m.outputs.push_back((dir / f).string());
  m.write(dir);

  std::printf("records    %zu\n", records.size());
  int counts[3] = {0, 0, 0};
  for (const auto& l : labeled) ++counts[static_cast<int>(l.context)];
  std::printf("contexts   initial %d, sequential %d, excluded %d\n", counts[0], counts[1], counts[2]);
  if (!summary.empty()) {
    std::printf("%-14s %-11s %8s %6s %6s %6s %8s\n", "condition", "context", "players", "q1", "median", "q3",
                "TQ>=0.8");
    for (const auto& s : summary)
      std::printf("%-14s %-11s %8d %6.1f %6.1f %6.1f %8.2f\n", std::string(to_string(s.condition)).c_str(),
                  std::string(to_string(s.context)).c_str(), s.players, s.q1, s.median, s.q3, s.share_tq_08);
  }
  for (const auto& e : eff)
    std::printf("%-14s searches/treasure %s, duplicated %d\n", std::string(to_string(e.condition)).c_str(),
                e.searches_per_treasure ? std::to_string(*e.searches_per_treasure).c_str() : "n/a", e.duplicated);
  std::printf("written    %s\n", dir.string().c_str());
  return kOk;
}

// ---- simulate ----

struct SimulateArgs {
  std::string condition = "protection";
  int initial = 20, sequential = 20;
  double noise = 0;
  int sessions = 1, games = 4, rounds = 50;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const Condition cond = condition_arg(a.condition);
  const Strategy st{a.initial, a.sequential};
  try {
    st.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (a.noise < 0 || a.noise > 1) throw InputError("--noise must lie in [0, 1]");
  if (a.sessions < 1 || a.games < 1 || a.rounds < 1) throw InputError("sessions, games and rounds must be positive");
  const auto log = analysis::simulate_log(
      cond, a.sessions, a.seed,
      [&](int) -> std::unique_ptr<Agent> {
        if (a.noise > 0) return std::make_unique<analysis::NoisyThresholdAgent>(st, a.noise);
        return std::make_unique<ThresholdAgent>(st);
      },
      a.games, a.rounds);
  const fs::path dir = a.out.empty() ? output_root() / "simulate" : fs::path(a.out);
  ensure_dir(dir);
  write_file(dir / "log.csv", [&](std::ostream& o) { write_log(o, log); });
  Manifest m("simulate");
  m.config = {{"condition", to_string(cond)}, {"initial", a.initial}, {"sequential", a.sequential},
              {"noise", a.noise}, {"sessions", a.sessions}, {"games", a.games}, {"rounds", a.rounds},
              {"seed", a.seed}};
  m.seeds = {{"master", a.seed}};
  m.outputs.push_back((dir / "log.csv").string());
  m.write(dir);
  std::printf("records    %zu\nwritten    %s\n", log.size(), (dir / "log.csv").string().c_str());
  return kOk;
}

// ---- serve ----

struct ServeArgs {
  std::string addr = "127.0.0.1:8080";
  std::string static_dir;
  std::string log_dir;
};

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

int cmd_serve(const ServeArgs& a) {
  const auto colon = a.addr.rfind(':');
  if (colon == std::string::npos) throw InputError("--addr must be host:port");
  const std::string host = a.addr.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(a.addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw InputError("bad port in --addr");
  }
  if (port < 0 || port > 65535) throw InputError("port out of range");
  if (!a.static_dir.empty() && !fs::is_directory(a.static_dir))
    throw InputError("static dir " + a.static_dir + " does not exist");

  server::ManagerOptions mo;
  mo.log_dir = a.log_dir.empty() ? output_root() / "sessions" : fs::path(a.log_dir);
  server::SessionManager sessions(mo);
  server::HttpOptions ho;
  if (!a.static_dir.empty()) ho.static_dir = a.static_dir;
  server::HttpServer http(sessions, ho);
  if (port == 0) {
    port = http.bind_any(host);
    if (port < 0) {
      std::fprintf(stderr, "cannot bind %s\n", host.c_str());
      return kRuntimeFailure;
    }
  } else if (!http.bind(host, port)) {
    std::fprintf(stderr, "cannot bind %s: address in use or not available\n", a.addr.c_str());
    return kRuntimeFailure;
  }

  g_stop = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&] {
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    http.wait_until_ready();
    http.stop();
  });
  std::printf("listening on %s:%d (logs in %s)\n", host.c_str(), port, mo.log_dir->string().c_str());
  std::fflush(stdout);
  const bool ok = http.serve();
  g_stop = true;
  watcher.join();
  std::printf("server stopped\n");
  return ok ? kOk : kRuntimeFailure;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Treasure-hunt game: simulation, theory solvers, analysis and session server"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override it");
  app.set_version_flag("--version", kVersion);

  GenmapArgs gm;
  auto* genmap = app.add_subcommand("genmap", "Generate and validate a treasure map");
  genmap->add_option("--seed", gm.seed);
  genmap->add_option("--width", gm.width);
  genmap->add_option("--height", gm.height);
  genmap->add_option("--mines", gm.mines);
  genmap->add_option("--out", gm.out, "map JSON file");

  SolveArgs sv;
  auto* solve = app.add_subcommand("solve", "Print theory solutions as JSON");
  solve->add_option("--model", sv.model, "abstract, game, bounds, two-stage or all");
  solve->add_option("--Rr", sv.Rr);
  solve->add_option("--Ra", sv.Ra);
  solve->add_option("--n", sv.n);
  solve->add_option("--alpha", sv.alpha);
  solve->add_option("--beta", sv.beta);
  solve->add_option("--R", sv.R);
  solve->add_option("--A", sv.A);
  solve->add_flag("--discrete", sv.discrete, "use the game's discrete cost support");
  solve->add_option("--out", sv.out, "also write the JSON here");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over symmetric threshold profiles");
  sweep->add_option("--condition", sw.condition);
  sweep->add_option("--reps", sw.reps);
  sweep->add_option("--grid", sw.grid, "start:stop:step or comma list");
  sweep->add_option("--seed", sw.seed);
  sweep->add_option("--out", sw.out, "output directory");
  sweep->add_option("--jobs", sw.jobs, "OpenMP threads (0: runtime default)");
  sweep->add_flag("--serial", sw.serial, "use the serial reference implementation");
  sweep->add_flag("--best-response", sw.best_response, "also run the best-response equilibrium search");
  sweep->add_option("--targeting", sw.targeting, "greedy or uniform");
  sweep->add_option("--map", sw.map, "fixed map JSON (default: fresh map per repetition)");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Label, fit and summarize a decision log");
  analyze->add_option("--log", an.log);
  analyze->add_option("--exclude-last", an.exclude_last);
  analyze->add_option("--out", an.out, "output directory");
  analyze->add_flag("--strict-initial", an.strict_initial);
  analyze->add_flag("--paper-candidates", an.paper_candidates, "drop the always-search candidate 40");
  analyze->add_option("--condition", an.condition, "keep one condition only");
  analyze->add_option("--width", an.width);
  analyze->add_option("--height", an.height);

  SimulateArgs sm;
  auto* simulate = app.add_subcommand("simulate", "Write a decision log played by threshold bots");
  simulate->add_option("--condition", sm.condition);
  simulate->add_option("--initial", sm.initial);
  simulate->add_option("--sequential", sm.sequential);
  simulate->add_option("--noise", sm.noise, "probability of flipping each decision");
  simulate->add_option("--sessions", sm.sessions);
  simulate->add_option("--games", sm.games);
  simulate->add_option("--rounds", sm.rounds);
  simulate->add_option("--seed", sm.seed);
  simulate->add_option("--out", sm.out, "output directory");

  ServeArgs se;
  auto* serve = app.add_subcommand("serve", "Run the session service");
  serve->add_option("--addr", se.addr, "host:port (port 0 picks a free one)");
  serve->add_option("--static-dir", se.static_dir);
  serve->add_option("--log-dir", se.log_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidInput;
  }

  try {
    ConfigLayer cfg;
    if (!config_path.empty()) cfg.load(config_path);
    if (genmap->parsed()) {
      cfg.apply(genmap, "seed", gm.seed);
      cfg.apply(genmap, "width", gm.width);
      cfg.apply(genmap, "height", gm.height);
      cfg.apply(genmap, "mines", gm.mines);
      cfg.apply(genmap, "out", gm.out);
      return cmd_genmap(gm);
    }
    if (solve->parsed()) {
      cfg.apply(solve, "Rr", sv.Rr);
      cfg.apply(solve, "Ra", sv.Ra);
      cfg.apply(solve, "alpha", sv.alpha);
      cfg.apply(solve, "beta", sv.beta);
      cfg.apply(solve, "R", sv.R);
      cfg.apply(solve, "A", sv.A);
      cfg.apply(solve, "model", sv.model);
      cfg.apply(solve, "n", sv.n);
      cfg.apply(solve, "discrete", sv.discrete);
      cfg.apply(solve, "out", sv.out);
      return cmd_solve(sv);
    }
    if (sweep->parsed()) {
      cfg.apply(sweep, "condition", sw.condition);
      cfg.apply(sweep, "reps", sw.reps);
      cfg.apply(sweep, "grid", sw.grid);
      cfg.apply(sweep, "seed", sw.seed);
      cfg.apply(sweep, "out", sw.out);
      cfg.apply(sweep, "jobs", sw.jobs);
      cfg.apply(sweep, "serial", sw.serial);
      cfg.apply(sweep, "best-response", sw.best_response);
      cfg.apply(sweep, "targeting", sw.targeting);
      cfg.apply(sweep, "map", sw.map);
      return cmd_sweep(sw);
    }
    if (analyze->parsed()) {
      cfg.apply(analyze, "log", an.log);
      cfg.apply(analyze, "exclude-last", an.exclude_last);
      cfg.apply(analyze, "out", an.out);
      cfg.apply(analyze, "strict-initial", an.strict_initial);
      cfg.apply(analyze, "paper-candidates", an.paper_candidates);
      cfg.apply(analyze, "condition", an.condition);
      cfg.apply(analyze, "width", an.width);
      cfg.apply(analyze, "height", an.height);
      return cmd_analyze(an);
    }
    if (simulate->parsed()) {
      cfg.apply(simulate, "condition", sm.condition);
      cfg.apply(simulate, "initial", sm.initial);
      cfg.apply(simulate, "sequential", sm.sequential);
      cfg.apply(simulate, "noise", sm.noise);
      cfg.apply(simulate, "sessions", sm.sessions);
      cfg.apply(simulate, "games", sm.games);
      cfg.apply(simulate, "rounds", sm.rounds);
      cfg.apply(simulate, "seed", sm.seed);
      cfg.apply(simulate, "out", sm.out);
      return cmd_simulate(sm);
    }
    if (serve->parsed()) {
      cfg.apply(serve, "addr", se.addr);
      cfg.apply(serve, "static-dir", se.static_dir);
      cfg.apply(serve, "log-dir", se.log_dir);
      return cmd_serve(se);
    }
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalidInput;
  } catch (const InvalidMapRequest& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalidInput;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failed: %s\n", e.what());
    return kRuntimeFailure;
  }
  return kRuntimeFailure;
}

}  // namespace treasure::cli

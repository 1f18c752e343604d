#include "treasure/decision_log.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace treasure {

LogParseError::LogParseError(int line_, const std::string& message)
    : std::runtime_error("decision log line " + std::to_string(line_) + ": " + message), line(line_) {}

std::string format_record(const DecisionRecord& r) {
  std::string s;
  s.reserve(96);
  s += to_string(r.condition);
  s += ',' + std::to_string(r.map_id);
  s += ',' + std::to_string(r.seed);
  s += ',' + std::to_string(r.game_index);
  s += ',' + std::to_string(r.round);
  s += ',' + std::to_string(r.player);
  s += ',' + std::to_string(r.cost);
  s += r.search ? ",search," : ",skip,";
  if (r.cell) s += std::to_string(r.cell->col) + ':' + std::to_string(r.cell->row);
  s += ',';
  s += to_string(r.outcome);
  s += ',' + std::to_string(r.n_cofinders);
  s += ',' + r.reward_gross.to_string();
  s += ',' + r.payoff_net.to_string();
  s += r.open_own_mine ? ",1" : ",0";
  s += r.open_any_mine ? ",1" : ",0";
  s += r.other_found_last_round ? ",1" : ",0";
  return s;
}

void write_log(std::ostream& out, std::span<const DecisionRecord> records, bool header) {
  if (header) out << kLogHeader << '\n';
  for (const DecisionRecord& r : records) out << format_record(r) << '\n';
}

namespace {

template <typename T>
T number(std::string_view field, int line, const char* name) {
  T v{};
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || p != field.data() + field.size())
    throw LogParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
  return v;
}

bool flag(std::string_view field, int line, const char* name) {
  if (field == "1" || field == "true") return true;
  if (field == "0" || field == "false") return false;
  throw LogParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
}

Outcome parse_outcome(std::string_view f, int line) {
  for (Outcome o : {Outcome::None, Outcome::Fail, Outcome::FirstTreasure, Outcome::SubsequentTreasure})
    if (f == to_string(o)) return o;
  throw LogParseError(line, "bad outcome '" + std::string(f) + "'");
}

}  // namespace

std::vector<DecisionRecord> read_log(std::istream& in) {
  std::vector<DecisionRecord> out;
  std::string text;
  int line = 0;
  if (!std::getline(in, text)) throw LogParseError(1, "empty log, header required");
  ++line;
  if (!text.empty() && text.back() == '\r') text.pop_back();
  if (text != kLogHeader) throw LogParseError(1, "unexpected header");
  std::vector<std::string_view> f;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    f.clear();
    std::string_view rest(text);
    for (;;) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 16)
      throw LogParseError(line, "expected 16 fields, got " + std::to_string(f.size()));
    DecisionRecord r;
    try {
      r.condition = parse_condition(f[0]);
    } catch (const std::invalid_argument& e) {
      throw LogParseError(line, e.what());
    }
    r.map_id = number<int>(f[1], line, "map_id");
    r.seed = number<std::uint64_t>(f[2], line, "seed");
    r.game_index = number<int>(f[3], line, "game_index");
    r.round = number<int>(f[4], line, "round");
    r.player = number<int>(f[5], line, "player");
    r.cost = number<int>(f[6], line, "cost");
    if (f[7] == "search")
      r.search = true;
    else if (f[7] != "skip")
      throw LogParseError(line, "bad action '" + std::string(f[7]) + "'");
    if (!f[8].empty()) {
      const auto colon = f[8].find(':');
      if (colon == std::string_view::npos) throw LogParseError(line, "bad cell '" + std::string(f[8]) + "'");
      r.cell = HexCoord{number<int>(f[8].substr(0, colon), line, "cell column"),
                        number<int>(f[8].substr(colon + 1), line, "cell row")};
    }
    if (r.search != r.cell.has_value()) throw LogParseError(line, "cell must be present iff action is search");
    r.outcome = parse_outcome(f[9], line);
    if ((r.outcome == Outcome::None) == r.search)
      throw LogParseError(line, "outcome none must go with skip");
    r.n_cofinders = number<int>(f[10], line, "n_cofinders");
    try {
      r.reward_gross = Points::parse(f[11]);
      r.payoff_net = Points::parse(f[12]);
    } catch (const std::invalid_argument& e) {
      throw LogParseError(line, e.what());
    }
    r.open_own_mine = flag(f[13], line, "open_own_mine");
    r.open_any_mine = flag(f[14], line, "open_any_mine");
    r.other_found_last_round = flag(f[15], line, "other_found_last_round");
    out.push_back(r);
  }
  return out;
}

std::vector<DecisionRecord> read_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open decision log " + path);
  return read_log(in);
}

}  // namespace treasure

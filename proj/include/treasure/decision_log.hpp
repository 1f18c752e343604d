#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "treasure/engine.hpp"

namespace treasure {

// Column order is fixed; readers rely on it.
inline constexpr const char* kLogHeader =
    "condition,map_id,seed,game_index,round,player,cost,action,cell,outcome,n_cofinders,"
    "reward_gross,payoff_net,open_own_mine,open_any_mine,other_found_last_round";

class LogParseError : public std::runtime_error {
 public:
  LogParseError(int line, const std::string& message);
  int line;  // 1-based, header is line 1
};

std::string format_record(const DecisionRecord& r);
void write_log(std::ostream& out, std::span<const DecisionRecord> records, bool header = true);
std::vector<DecisionRecord> read_log(std::istream& in);
std::vector<DecisionRecord> read_log_file(const std::string& path);

}  // namespace treasure

#pragma once

namespace treasure::cli {

// Exit codes: 0 success, 1 runtime failure, 2 invalid input.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeFailure = 1;
inline constexpr int kInvalidInput = 2;

int run(int argc, char** argv);

}  // namespace treasure::cli

#pragma once

// Command-line front end. `run` is the whole program minus process exit so
// tests can drive it in-process.
//
// Exit codes: 0 ok, 1 constraint violations (or a failed benchmark
// assertion), 2 input or schema error, 3 search budget exceeded.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "spanrel/decode.hpp"

namespace spanrel {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolations = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitBudget = 3;

// Environment variable naming a RunConfig file used as the default for every
// command. `--config` overrides it and explicit flags override both.
inline constexpr const char* kConfigEnvVar = "SPANREL_CONFIG";

struct RunConfig {
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t max_span_width = 12;
  std::size_t k_span = 0;  // 0: min(valid spans, max(8, L))
  std::size_t k_rel = 0;   // 0: same as the span K
  std::size_t depth = 1;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::kJoint;
  std::size_t budget = 2'000'000;
  std::size_t jobs = 1;
  bool use_bias = true;

  // Throws std::invalid_argument for non-positive sizes or margin.
  void validate() const;
};

// Keys mirror the field names; unknown keys are rejected with FormatError.
RunConfig load_run_config(const std::filesystem::path& path);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spanrel

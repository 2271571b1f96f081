#pragma once
// One entry point per subcommand. Each takes the fully resolved config
// (defaults, then config file, then flag overrides) and returns the process
// exit code: 0 success, 1 verification failure, 2 bad config, 3 numerical
// failure.

#include <json.hpp>

namespace amid::cli {

int run_mixture(nlohmann::json config);
int run_divergence(nlohmann::json config);
int run_grad_check(nlohmann::json config);
int run_fit_simplex(nlohmann::json config);
int run_toy(nlohmann::json config);
int run_sweep(nlohmann::json config);
int run_distill(nlohmann::json config);

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailure = 1;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitNumericalFailure = 3;

}  // namespace amid::cli

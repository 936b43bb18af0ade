#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "chainlab/experiments.hpp"

namespace chainlab {

// JSON config. Keys mirror RunConfig (snake_case) plus the experiment
// fields; anything unknown is rejected.
//
//   {
//     "target": "illcond:d=51,kappa=1000",
//     "chains": 8, "warmup": 1000, "sampling": 1000, "groups": 1,
//     "sampler": "hmc", "adaptation": "cross-chain",
//     "init": {"kind": "overdispersed", "scale": 0, "points": [[0, 0]]},
//     "root_seed": 7, "rhat_threshold": 0.01, "target_ess": 400,
//     "max_total_iterations": 100000,
//     "replications": 100, "seeds": [1, 2, 3],
//     "sweep_chain_counts": [2, 4, 8], "sweep_replicates": 20,
//     "bias_threshold": 0.1, "format": "csv", "threads": 0,
//     "oracle": {"mu0": 2, "sigma0": 1, "mu": 0, "sigma": 1,
//                "t_grid": [0, 0.5, 1], "two_state_q": [0.3, 0.5],
//                "two_state_steps": 1000000, "groups": 200,
//                "replicates_per_group": 5000}
//   }
//
// Fields not present keep the values already in `spec`.
void apply_config_json(std::string_view text, ExperimentSpec& spec);
void apply_config_file(const std::filesystem::path& path, ExperimentSpec& spec);

// Echo of the effective configuration (no execution-only fields such as the
// thread count, so that outputs do not depend on them).
std::string config_to_json(const ExperimentSpec& spec, int indent = 2);

}  // namespace chainlab

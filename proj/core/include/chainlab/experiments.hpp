#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "chainlab/engine.hpp"
#include "chainlab/oracle.hpp"

namespace chainlab {

enum class ExperimentKind { run, replicate, sweep_chains, oracle, summarize };
enum class DrawFormat { csv, bin };

std::string_view to_string(ExperimentKind kind);
std::string_view to_string(DrawFormat format);
DrawFormat parse_draw_format(std::string_view token);

struct OracleSettings {
  OUProcessSpec ou{2.0, 1.0, 0.0, 1.0};
  std::vector<double> t_grid{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<double> two_state_q{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t two_state_steps = 1'000'000;
  std::size_t groups = 200;
  std::size_t replicates_per_group = 5000;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::run;
  std::string target = "gaussian:d=1";
  RunConfig base;
  // Replicate studies use `seeds` when given, else `replications` seeds
  // derived from base.root_seed.
  std::size_t replications = 1;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> sweep_chain_counts{2, 4, 8};
  std::size_t sweep_replicates = 20;
  double bias_threshold = 0.1;
  OracleSettings oracle;
  std::filesystem::path output_dir = ".";
  DrawFormat format = DrawFormat::csv;
  std::size_t threads = 0;
  std::filesystem::path draws_path;  // summarize input
};

void validate(const ExperimentSpec& spec);

// Seeds of a replicate or sweep study, in row order.
std::vector<std::uint64_t> replicate_seeds(const ExperimentSpec& spec);

// ---- run ----------------------------------------------------------------

struct RunOutcome {
  RunResult result;
  std::vector<std::filesystem::path> files;
};

// Writes draws.csv (or draws.bin + draws.bin.json), summary.csv,
// summary.json and run_meta.json. Uses run_adaptive when target_ess is set.
RunOutcome cmd_run(const ExperimentSpec& spec);

// ---- replicate ----------------------------------------------------------

struct ReplicateRow {
  std::uint64_t seed = 0;
  double rhat = 0.0;
  double split_rhat = 0.0;
  double ess = 0.0;
  double mean = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

struct ReplicateAggregate {
  std::size_t replications = 0;
  double share_rhat_above = 0.0;        // R-hat > 1 + eps (NaN counts as above)
  double share_split_rhat_above = 0.0;
  double mean_ess = 0.0;
  double mean_of_means = 0.0;
  double sd_of_means = 0.0;
};

// One run per seed; diagnostics of the first quantity (theta[0]).
std::vector<ReplicateRow> replicate_runs(const ExperimentSpec& spec);
ReplicateAggregate aggregate(const std::vector<ReplicateRow>& rows, double rhat_threshold);

// replicate.csv, plus replicate_summary.json when there is more than one row.
std::vector<ReplicateRow> cmd_replicate(const ExperimentSpec& spec);

// ---- sweep --------------------------------------------------------------

// Warmup iterations per bias checkpoint in the chain-count sweep.
inline constexpr std::size_t kSweepCheckpoint = 25;

struct SweepRow {
  std::size_t chains = 0;
  // Cost at which the bias crosses the threshold, interpolating log-bias
  // linearly between the two bracketing checkpoints.
  double grad_evals_per_chain = 0.0;
  double grad_evals_at_checkpoint = 0.0;  // at the first checkpoint below threshold
  double achieved_bias = 0.0;
  bool achieved = false;
  std::size_t iterations = 0;  // warmup iterations at that checkpoint
};

// Standardized bias at each checkpoint: max over dimensions of
// |estimate_i - mean_i| / sd_i, where estimate_i averages the draws of the
// last kSweepCheckpoint warmup iterations over chains and then over replicate
// seeds. Costs are medians over seeds of the per-chain mean cumulative
// gradient evaluations. Replicate r uses the same root seed for every chain
// count.
std::vector<SweepRow> sweep_chains(const ExperimentSpec& spec);
std::vector<SweepRow> cmd_sweep_chains(const ExperimentSpec& spec);

// ---- oracle -------------------------------------------------------------

struct TwoStateRow {
  double q = 0.0;
  double ess_per_draw_analytic = 0.0;
  double ess_per_draw_measured = 0.0;
  double tv_decay_factor = 0.0;
};

struct OracleOutcome {
  std::vector<OuDecayRow> decay;
  std::vector<TwoStateRow> two_state;
};

OracleOutcome oracle_study(const ExperimentSpec& spec);
OracleOutcome cmd_oracle(const ExperimentSpec& spec);

// ---- summarize ----------------------------------------------------------

// Reads draws.csv or a binary draws file (by extension) and writes
// summary.csv and summary.json.
DiagnosticsReport cmd_summarize(const ExperimentSpec& spec);

// CSV renderings, exposed for tests.
std::string replicate_csv(const std::vector<ReplicateRow>& rows);
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string ou_decay_csv(const std::vector<OuDecayRow>& rows);
std::string two_state_csv(const std::vector<TwoStateRow>& rows);

}  // namespace chainlab

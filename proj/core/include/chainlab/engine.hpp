#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "chainlab/adaptation.hpp"
#include "chainlab/chain_matrix.hpp"
#include "chainlab/diagnostics.hpp"
#include "chainlab/model.hpp"
#include "chainlab/rng.hpp"
#include "chainlab/samplers.hpp"

namespace chainlab {

enum class InitKind { overdispersed, fixed_points, standard_normal };

std::string_view to_string(InitKind kind);
InitKind parse_init_kind(std::string_view token);

struct InitStrategy {
  InitKind kind = InitKind::overdispersed;
  // Overdispersed start sd; <= 0 picks 4x the target's largest marginal sd,
  // or 10 when the target has no analytic moments.
  double scale = 0.0;
  std::vector<Vector> points;  // fixed_points: one per group
};

struct RunConfig {
  std::size_t chains = 4;
  std::size_t warmup = 1000;
  std::size_t sampling = 1000;
  // Initialization groups. 1 means ungrouped: every chain gets its own
  // start. With K >= 2, the M/K chains of a group share one start exactly.
  std::size_t groups = 1;
  SamplerKind sampler = SamplerKind::hmc;
  AdaptationMode adaptation = AdaptationMode::per_chain;
  InitStrategy init;
  std::uint64_t root_seed = 0;
  double rhat_threshold = kDefaultRhatThreshold;
  std::optional<double> target_ess;
  // Per-chain cap on warmup + sampling iterations (adaptive runs).
  std::size_t max_total_iterations = 100000;
};

void validate(const RunConfig& config);

struct ExecutionOptions {
  std::size_t threads = 0;  // 0: one worker per hardware thread
};

struct ChainInit {
  std::size_t group = 0;
  Vector theta0;
  RngStream rng;
};

std::vector<ChainInit> initialize(const RunConfig& config, const TargetModel& model);

enum class StoppingReason { fixed_budget, target_met, budget_exhausted };
std::string_view to_string(StoppingReason reason);

struct WindowRecord {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool metric_updated = false;
  // Cumulative per-chain gradient evaluations at the end of the window,
  // including the tuning work done at its boundary.
  std::vector<std::uint64_t> gradient_evaluations;
  double step_size = 0.0;  // chain 0, after the boundary update
  int num_leapfrog_steps = 0;
};

struct PhaseTimes {
  double warmup_seconds = 0.0;
  double sampling_seconds = 0.0;
};

struct RunResult {
  ChainMatrix draws;
  std::vector<TuningState> tunings;  // frozen, per chain
  std::vector<std::uint64_t> gradient_evaluations;
  std::uint64_t model_gradient_evaluations = 0;  // model counter delta over the run
  PhaseTimes wall_time;
  DiagnosticsReport report;
  StoppingReason stopping_reason = StoppingReason::fixed_budget;
  std::vector<WindowRecord> warmup_windows;
  // Per chain: cumulative gradient evaluations after each warmup iteration.
  std::vector<std::vector<std::uint64_t>> warmup_gradient_trace;
  // Serialized tuning at the first sampling draw; equal to the final
  // tunings' serialization by construction.
  std::vector<std::string> tuning_at_freeze;
};

// Warmup (adaptation on) then sampling with frozen tuning. Output depends
// only on (config, model, quantities), never on the worker count.
RunResult run(const RunConfig& config, const TargetModel& model,
              std::span<const QuantityOfInterest> quantities, const ExecutionOptions& exec = {});

// run() for the many-short-chains regime; with one draw per chain the ESS
// comes from the independent-chains path (ESS = M).
RunResult run_many_short(const RunConfig& config, const TargetModel& model,
                         std::span<const QuantityOfInterest> quantities,
                         const ExecutionOptions& exec = {});

// Samples in increments of 100, 200, 400, ... iterations per chain after
// warmup until every quantity has ESS >= target_ess and R-hat <= 1 + eps,
// or the per-chain budget runs out.
RunResult run_adaptive(const RunConfig& config, const TargetModel& model,
                       std::span<const QuantityOfInterest> quantities,
                       const ExecutionOptions& exec = {});

inline constexpr std::size_t kAdaptiveFirstIncrement = 100;

}  // namespace chainlab

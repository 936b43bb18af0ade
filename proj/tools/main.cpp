// chainlab: run, replicate, sweep-chains, oracle, summarize.
//
// Exit codes: 0 success, 1 invalid arguments, 2 runtime failure,
// 3 adaptive run stopped with the budget exhausted.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chainlab/config.hpp"
#include "chainlab/errors.hpp"
#include "chainlab/experiments.hpp"
#include "chainlab/target_spec.hpp"

namespace {

enum ExitCode { kOk = 0, kInvalid = 1, kRuntime = 2, kTargetsNotMet = 3 };

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> format;

  std::optional<std::string> target;
  std::optional<std::string> sampler;
  std::optional<std::size_t> chains;
  std::optional<std::size_t> warmup;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> groups;
  std::optional<std::string> adapt;
  std::optional<double> target_ess;
  std::optional<double> rhat_threshold;

  std::optional<std::size_t> replications;
  std::vector<std::size_t> counts;
  std::optional<std::size_t> sweep_replicates;
  std::optional<double> bias_threshold;
  std::string draws;
};

void add_run_flags(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--target", o.target, "Target spec, e.g. gaussian:d=10 or illcond:d=51,kappa=1000");
  cmd.add_option("--sampler", o.sampler, "rwm | mala | hmc");
  cmd.add_option("--chains", o.chains, "Number of chains");
  cmd.add_option("--warmup", o.warmup, "Warmup iterations per chain");
  cmd.add_option("--samples", o.samples, "Sampling iterations per chain");
  cmd.add_option("--groups", o.groups, "Initialization groups (1 = ungrouped)");
  cmd.add_option("--adapt", o.adapt, "per-chain | cross-chain");
  cmd.add_option("--target-ess", o.target_ess, "Adaptive stopping: minimum ESS per quantity");
  cmd.add_option("--rhat-threshold", o.rhat_threshold, "R-hat flag threshold eps (flag at 1 + eps)");
}

chainlab::ExperimentSpec build_spec(chainlab::ExperimentKind kind, const Overrides& o) {
  using namespace chainlab;
  ExperimentSpec spec;
  spec.kind = kind;
  if (kind == ExperimentKind::sweep_chains) {
    spec.target = "illcond:d=51,kappa=1000";
    spec.base.adaptation = AdaptationMode::cross_chain;
  }
  if (o.config) apply_config_file(*o.config, spec);
  auto& c = spec.base;
  if (o.out) spec.output_dir = *o.out;
  if (o.seed) c.root_seed = *o.seed;
  if (o.threads) spec.threads = *o.threads;
  if (o.format) spec.format = parse_draw_format(*o.format);
  if (o.target) spec.target = *o.target;
  if (o.sampler) c.sampler = parse_sampler_kind(*o.sampler);
  if (o.chains) c.chains = *o.chains;
  if (o.warmup) c.warmup = *o.warmup;
  if (o.samples) c.sampling = *o.samples;
  if (o.groups) c.groups = *o.groups;
  if (o.adapt) c.adaptation = parse_adaptation_mode(*o.adapt);
  if (o.target_ess) c.target_ess = *o.target_ess;
  if (o.rhat_threshold) c.rhat_threshold = *o.rhat_threshold;
  if (o.replications) {
    spec.replications = *o.replications;
    spec.seeds.clear();
  }
  if (!o.counts.empty()) spec.sweep_chain_counts = o.counts;
  if (o.sweep_replicates) spec.sweep_replicates = *o.sweep_replicates;
  if (o.bias_threshold) spec.bias_threshold = *o.bias_threshold;
  spec.draws_path = o.draws;
  return spec;
}

int execute(chainlab::ExperimentKind kind, const Overrides& o) {
  using namespace chainlab;
  const ExperimentSpec spec = build_spec(kind, o);
  switch (kind) {
    case ExperimentKind::run: {
      const auto out = cmd_run(spec);
      const auto& r = out.result;
      std::printf("stopping reason: %s; min ESS %.1f, max R-hat %.4f\n",
                  std::string(to_string(r.stopping_reason)).c_str(), r.report.min_ess(),
                  r.report.max_rhat());
      return r.stopping_reason == StoppingReason::budget_exhausted ? kTargetsNotMet : kOk;
    }
    case ExperimentKind::replicate: {
      const auto rows = cmd_replicate(spec);
      if (rows.size() > 1) {
        const auto a = aggregate(rows, spec.base.rhat_threshold);
        std::printf("%zu replications; share with R-hat > %.4f: %.3f\n", a.replications,
                    1.0 + spec.base.rhat_threshold, a.share_rhat_above);
      }
      return kOk;
    }
    case ExperimentKind::sweep_chains: {
      for (const auto& row : cmd_sweep_chains(spec)) {
        std::printf("M=%zu grad evals/chain %.0f bias %.4f%s\n", row.chains, row.grad_evals_per_chain,
                    row.achieved_bias, row.achieved ? "" : " (not achieved)");
      }
      return kOk;
    }
    case ExperimentKind::oracle:
      cmd_oracle(spec);
      return kOk;
    case ExperimentKind::summarize: {
      const auto report = cmd_summarize(spec);
      std::printf("%zu quantities; min ESS %.1f, max R-hat %.4f\n", report.quantities.size(),
                  report.min_ess(), report.max_rhat());
      return kOk;
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chainlab: multi-chain MCMC runs, diagnostics and oracle studies"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "JSON config file; flags override its values");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--seed", o.seed, "Root seed");
  app.add_option("--threads", o.threads, "Worker threads (0 = hardware concurrency)");
  app.add_option("--format", o.format, "Draw file format: csv | bin");

  auto* run = app.add_subcommand("run", "Warmup and sampling, then diagnostics");
  add_run_flags(*run, o);
  auto* replicate = app.add_subcommand("replicate", "Repeat a run over many seeds");
  add_run_flags(*replicate, o);
  replicate->add_option("--replications", o.replications, "Number of seeds");
  auto* sweep = app.add_subcommand("sweep-chains", "Bias decay during warmup vs chain count");
  add_run_flags(*sweep, o);
  sweep->add_option("--counts", o.counts, "Chain counts, strictly increasing")->delimiter(',');
  sweep->add_option("--replicates", o.sweep_replicates, "Replicate seeds per chain count");
  sweep->add_option("--bias-threshold", o.bias_threshold, "Standardized bias to reach");
  auto* oracle = app.add_subcommand("oracle", "OU decay and two-state studies");
  auto* summarize = app.add_subcommand("summarize", "Recompute diagnostics from a draws file");
  summarize->add_option("draws", o.draws, "draws.csv or draws.bin")->required();
  summarize->add_option("--rhat-threshold", o.rhat_threshold, "R-hat flag threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  using chainlab::ExperimentKind;
  ExperimentKind kind = ExperimentKind::run;
  if (*replicate) kind = ExperimentKind::replicate;
  if (*sweep) kind = ExperimentKind::sweep_chains;
  if (*oracle) kind = ExperimentKind::oracle;
  if (*summarize) kind = ExperimentKind::summarize;
  (void)run;

  try {
    return execute(kind, o);
  } catch (const chainlab::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

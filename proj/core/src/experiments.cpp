#include "chainlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "chainlab/config.hpp"
#include "chainlab/errors.hpp"
#include "chainlab/io.hpp"
#include "chainlab/parallel.hpp"
#include "chainlab/target_spec.hpp"

namespace chainlab {

using nlohmann::json;

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::run: return "run";
    case ExperimentKind::replicate: return "replicate";
    case ExperimentKind::sweep_chains: return "sweep-chains";
    case ExperimentKind::oracle: return "oracle";
    case ExperimentKind::summarize: return "summarize";
  }
  return "?";
}

std::string_view to_string(DrawFormat format) {
  return format == DrawFormat::csv ? "csv" : "bin";
}

DrawFormat parse_draw_format(std::string_view token) {
  if (token == "csv") return DrawFormat::csv;
  if (token == "bin") return DrawFormat::bin;
  throw InvalidArgument("unknown draw format '" + std::string(token) + "' (expected csv or bin)");
}

void validate(const ExperimentSpec& spec) {
  validate(spec.base);
  if (spec.replications < 1) throw InvalidArgument("replications must be at least 1");
  if (spec.sweep_chain_counts.empty()) throw InvalidArgument("sweep needs at least one chain count");
  for (std::size_t i = 1; i < spec.sweep_chain_counts.size(); ++i) {
    if (spec.sweep_chain_counts[i] <= spec.sweep_chain_counts[i - 1]) {
      throw InvalidArgument("sweep chain counts must be strictly increasing");
    }
  }
  if (spec.sweep_replicates < 1) throw InvalidArgument("sweep_replicates must be at least 1");
  if (!(spec.bias_threshold > 0.0)) throw InvalidArgument("bias_threshold must be positive");
  validate(spec.oracle.ou);
  for (double t : spec.oracle.t_grid) {
    if (!(t >= 0.0)) throw InvalidArgument("oracle t_grid values must be non-negative");
  }
  for (double q : spec.oracle.two_state_q) {
    if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("two-state q must lie in (0, 1]");
  }
}

std::vector<std::uint64_t> replicate_seeds(const ExperimentSpec& spec) {
  if (!spec.seeds.empty()) return spec.seeds;
  std::vector<std::uint64_t> seeds(spec.replications);
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    seeds[r] = derive_replicate_seed(spec.base.root_seed, r);
  }
  return seeds;
}

namespace {

std::filesystem::path prepare_output(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw RuntimeFailure("cannot create output directory '" + dir.string() + "'");
  }
  return dir;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

// ---- run ------------------------------------------------------------------

RunOutcome cmd_run(const ExperimentSpec& spec) {
  validate(spec);
  const TargetModel model = parse_target_spec(spec.target);
  const auto quantities = coordinate_quantities(model.dimension());
  const ExecutionOptions exec{spec.threads};
  const auto dir = prepare_output(spec.output_dir);

  RunOutcome out;
  out.result = spec.base.target_ess ? run_adaptive(spec.base, model, quantities, exec)
                                    : run(spec.base, model, quantities, exec);
  const auto& r = out.result;

  if (spec.format == DrawFormat::csv) {
    out.files.push_back(dir / "draws.csv");
    write_draws_csv(r.draws, out.files.back());
  } else {
    out.files.push_back(dir / "draws.bin");
    write_draws_binary(r.draws, out.files.back());
    out.files.push_back(dir / "draws.bin.json");
  }
  out.files.push_back(dir / "summary.csv");
  write_text_file(out.files.back(), report_to_csv(r.report));
  out.files.push_back(dir / "summary.json");
  write_text_file(out.files.back(), report_to_json(r.report));

  json chains = json::array();
  for (std::size_t m = 0; m < r.tunings.size(); ++m) {
    const auto& meta = r.draws.metadata()[m];
    chains.push_back({{"chain", m},
                      {"group", r.draws.group_of_chain()[m]},
                      {"seed", meta.seed},
                      {"step_size", r.tunings[m].step_size},
                      {"num_leapfrog_steps", r.tunings[m].num_leapfrog_steps},
                      {"diag_preconditioner", r.tunings[m].diag_preconditioner},
                      {"acceptance_rate", meta.acceptance_rate},
                      {"divergences", meta.divergences},
                      {"gradient_evaluations", r.gradient_evaluations[m]}});
  }
  json meta = {{"config", json::parse(config_to_json(spec))},
               {"stopping_reason", std::string(to_string(r.stopping_reason))},
               {"sampling_iterations", r.draws.sampling_iterations()},
               {"min_ess", finite_or_null(r.report.min_ess())},
               {"max_rhat", finite_or_null(r.report.max_rhat())},
               {"model_gradient_evaluations", r.model_gradient_evaluations},
               {"chains", chains},
               {"timings",
                {{"warmup_seconds", r.wall_time.warmup_seconds},
                 {"sampling_seconds", r.wall_time.sampling_seconds}}}};
  out.files.push_back(dir / "run_meta.json");
  write_text_file(out.files.back(), meta.dump(2) + "\n");
  return out;
}

// ---- replicate ------------------------------------------------------------

std::vector<ReplicateRow> replicate_runs(const ExperimentSpec& spec) {
  validate(spec);
  const TargetModel model = parse_target_spec(spec.target);
  const std::vector<QuantityOfInterest> quantities{coordinate_quantity(0)};
  const auto seeds = replicate_seeds(spec);
  std::vector<ReplicateRow> rows(seeds.size());
  parallel_for(seeds.size(), spec.threads, [&](std::size_t i) {
    RunConfig config = spec.base;
    config.root_seed = seeds[i];
    const RunResult result = run(config, model, quantities, ExecutionOptions{1});
    const auto& q = result.report.quantities.front();
    rows[i] = {seeds[i], q.rhat, q.split_rhat, q.ess, q.mean, q.q05, q.q50, q.q95};
  });
  return rows;
}

ReplicateAggregate aggregate(const std::vector<ReplicateRow>& rows, double rhat_threshold) {
  ReplicateAggregate a;
  a.replications = rows.size();
  if (rows.empty()) return a;
  const double limit = 1.0 + rhat_threshold;
  double above = 0.0, split_above = 0.0, ess_sum = 0.0, mean_sum = 0.0;
  for (const auto& r : rows) {
    above += !(r.rhat <= limit);
    split_above += !(r.split_rhat <= limit);
    ess_sum += r.ess;
    mean_sum += r.mean;
  }
  const double n = static_cast<double>(rows.size());
  a.share_rhat_above = above / n;
  a.share_split_rhat_above = split_above / n;
  a.mean_ess = ess_sum / n;
  a.mean_of_means = mean_sum / n;
  if (rows.size() > 1) {
    double ss = 0.0;
    for (const auto& r : rows) ss += (r.mean - a.mean_of_means) * (r.mean - a.mean_of_means);
    a.sd_of_means = std::sqrt(ss / (n - 1.0));
  }
  return a;
}

std::string replicate_csv(const std::vector<ReplicateRow>& rows) {
  std::string out = csv_line({"seed", "rhat", "split_rhat", "ess", "mean", "q05", "q50", "q95"});
  for (const auto& r : rows) {
    out += csv_line({std::to_string(r.seed), format_double(r.rhat), format_double(r.split_rhat),
                     format_double(r.ess), format_double(r.mean), format_double(r.q05),
                     format_double(r.q50), format_double(r.q95)});
  }
  return out;
}

std::vector<ReplicateRow> cmd_replicate(const ExperimentSpec& spec) {
  const auto dir = prepare_output(spec.output_dir);
  auto rows = replicate_runs(spec);
  write_text_file(dir / "replicate.csv", replicate_csv(rows));
  if (rows.size() > 1) {
    const auto a = aggregate(rows, spec.base.rhat_threshold);
    json doc = {{"config", json::parse(config_to_json(spec))},
                {"replications", a.replications},
                {"share_rhat_above", a.share_rhat_above},
                {"share_split_rhat_above", a.share_split_rhat_above},
                {"mean_ess", finite_or_null(a.mean_ess)},
                {"mean_of_means", finite_or_null(a.mean_of_means)},
                {"sd_of_means", finite_or_null(a.sd_of_means)}};
    write_text_file(dir / "replicate_summary.json", doc.dump(2) + "\n");
  }
  return rows;
}

// ---- sweep ----------------------------------------------------------------

std::vector<SweepRow> sweep_chains(const ExperimentSpec& spec) {
  validate(spec);
  if (spec.base.adaptation != AdaptationMode::cross_chain) {
    throw InvalidArgument("sweep-chains requires cross-chain adaptation");
  }
  const TargetModel model = parse_target_spec(spec.target);
  if (!model.analytic_mean() || !model.analytic_marginal_sd()) {
    throw InvalidArgument("sweep-chains needs a target with analytic mean and sd");
  }
  if (spec.base.warmup == 0) throw InvalidArgument("sweep-chains needs a positive warmup");
  const Vector& truth = *model.analytic_mean();
  const Vector& sd = *model.analytic_marginal_sd();
  const std::size_t d = model.dimension();
  const std::vector<QuantityOfInterest> quantities{coordinate_quantity(0)};

  ExperimentSpec seeded = spec;
  seeded.replications = spec.sweep_replicates;
  auto seeds = replicate_seeds(seeded);
  seeds.resize(std::min(seeds.size(), spec.sweep_replicates));
  const std::size_t reps = seeds.size();
  const auto& counts = spec.sweep_chain_counts;

  // Checkpoint k covers warmup iterations [k * kSweepCheckpoint, end_k).
  const std::size_t warmup = spec.base.warmup;
  const std::size_t checkpoints = (warmup + kSweepCheckpoint - 1) / kSweepCheckpoint;
  auto checkpoint_end = [&](std::size_t k) { return std::min(warmup, (k + 1) * kSweepCheckpoint); };

  // Per (count, replicate): checkpoint estimates (checkpoints x d) and mean
  // per-chain gradient evaluations at each checkpoint end.
  struct Cell {
    std::vector<Vector> estimates;
    std::vector<double> grad_evals;
  };
  std::vector<Cell> cells(counts.size() * reps);
  parallel_for(cells.size(), spec.threads, [&](std::size_t task) {
    const std::size_t c = task / reps, r = task % reps;
    RunConfig config = spec.base;
    config.chains = counts[c];
    config.groups = 1;
    config.sampling = 1;
    config.root_seed = seeds[r];
    const RunResult result = run(config, model, quantities, ExecutionOptions{1});
    Cell& cell = cells[task];
    for (std::size_t k = 0; k < checkpoints; ++k) {
      const std::size_t begin = k * kSweepCheckpoint, end = checkpoint_end(k);
      Vector est(d, 0.0);
      double total = 0.0;
      for (std::size_t m = 0; m < config.chains; ++m) {
        for (std::size_t n = begin; n < end; ++n) {
          const auto draw = result.draws.draw(m, n);
          for (std::size_t i = 0; i < d; ++i) est[i] += draw[i];
        }
        total += static_cast<double>(result.warmup_gradient_trace[m][end - 1]);
      }
      const double count = static_cast<double>(config.chains * (end - begin));
      for (double& v : est) v /= count;
      cell.estimates.push_back(std::move(est));
      cell.grad_evals.push_back(total / static_cast<double>(config.chains));
    }
  });

  std::vector<SweepRow> rows;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    SweepRow row;
    row.chains = counts[c];
    double prev_bias = 0.0, prev_cost = 0.0;
    for (std::size_t k = 0; k < checkpoints; ++k) {
      double bias = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double est = 0.0;
        for (std::size_t r = 0; r < reps; ++r) est += cells[c * reps + r].estimates[k][i];
        est /= static_cast<double>(reps);
        bias = std::max(bias, std::abs(est - truth[i]) / sd[i]);
      }
      std::vector<double> evals(reps);
      for (std::size_t r = 0; r < reps; ++r) evals[r] = cells[c * reps + r].grad_evals[k];
      const double cost = median(evals);
      row.achieved_bias = bias;
      row.grad_evals_at_checkpoint = cost;
      row.grad_evals_per_chain = cost;
      row.iterations = checkpoint_end(k);
      if (bias <= spec.bias_threshold) {
        row.achieved = true;
        if (k > 0 && bias > 0.0 && prev_bias > bias) {
          const double f = (std::log(prev_bias) - std::log(spec.bias_threshold)) /
                           (std::log(prev_bias) - std::log(bias));
          row.grad_evals_per_chain = prev_cost + f * (cost - prev_cost);
        }
        break;
      }
      prev_bias = bias;
      prev_cost = cost;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = csv_line({"chains", "grad_evals_per_chain", "achieved_bias", "achieved",
                              "iterations", "grad_evals_at_checkpoint"});
  for (const auto& r : rows) {
    out += csv_line({std::to_string(r.chains), format_double(r.grad_evals_per_chain),
                     format_double(r.achieved_bias), r.achieved ? "1" : "0",
                     std::to_string(r.iterations), format_double(r.grad_evals_at_checkpoint)});
  }
  return out;
}

std::vector<SweepRow> cmd_sweep_chains(const ExperimentSpec& spec) {
  const auto dir = prepare_output(spec.output_dir);
  auto rows = sweep_chains(spec);
  write_text_file(dir / "sweep.csv", sweep_csv(rows));
  return rows;
}

// ---- oracle ---------------------------------------------------------------

OracleOutcome oracle_study(const ExperimentSpec& spec) {
  validate(spec);
  OracleOutcome out;
  OuDecayOptions options;
  options.groups = spec.oracle.groups;
  options.replicates_per_group = spec.oracle.replicates_per_group;
  options.seed = spec.base.root_seed;
  options.threads = spec.threads;
  out.decay = ou_decay_study(spec.oracle.ou, spec.oracle.t_grid, options);

  const auto& qs = spec.oracle.two_state_q;
  out.two_state.resize(qs.size());
  parallel_for(qs.size(), spec.threads, [&](std::size_t i) {
    const auto a = two_state_analytics(qs[i]);
    const double measured = measured_two_state_ess_per_draw(
        qs[i], spec.oracle.two_state_steps, derive_replicate_seed(spec.base.root_seed, 1000 + i));
    out.two_state[i] = {qs[i], a.ess_per_draw, measured, a.tv_decay_factor};
  });
  return out;
}

std::string ou_decay_csv(const std::vector<OuDecayRow>& rows) {
  std::string out = csv_line({"t", "bias", "squared_bias", "nonstationary_var", "persistent_var", "tv"});
  for (const auto& r : rows) {
    out += csv_line({format_double(r.t), format_double(r.bias), format_double(r.squared_bias),
                     format_double(r.nonstationary_var), format_double(r.persistent_var),
                     format_double(r.tv)});
  }
  return out;
}

std::string two_state_csv(const std::vector<TwoStateRow>& rows) {
  std::string out = csv_line({"q", "ess_per_draw_analytic", "ess_per_draw_measured", "tv_decay_factor"});
  for (const auto& r : rows) {
    out += csv_line({format_double(r.q), format_double(r.ess_per_draw_analytic),
                     format_double(r.ess_per_draw_measured), format_double(r.tv_decay_factor)});
  }
  return out;
}

OracleOutcome cmd_oracle(const ExperimentSpec& spec) {
  const auto dir = prepare_output(spec.output_dir);
  auto out = oracle_study(spec);
  write_text_file(dir / "ou_decay.csv", ou_decay_csv(out.decay));
  write_text_file(dir / "two_state.csv", two_state_csv(out.two_state));
  return out;
}

// ---- summarize ------------------------------------------------------------

DiagnosticsReport cmd_summarize(const ExperimentSpec& spec) {
  if (spec.draws_path.empty()) throw InvalidArgument("summarize needs a draws file");
  if (!(spec.base.rhat_threshold > 0.0)) throw InvalidArgument("rhat_threshold must be positive");
  const ChainMatrix matrix = spec.draws_path.extension() == ".bin" ? read_draws_binary(spec.draws_path)
                                                                  : read_draws_csv(spec.draws_path);
  const auto quantities = coordinate_quantities(matrix.dimension());
  DiagnosticsReport report = summarize(matrix, quantities, spec.base.rhat_threshold);
  const auto dir = prepare_output(spec.output_dir);
  write_text_file(dir / "summary.csv", report_to_csv(report));
  write_text_file(dir / "summary.json", report_to_json(report));
  return report;
}

}  // namespace chainlab

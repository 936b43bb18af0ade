#include "chainlab/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "chainlab/errors.hpp"
#include "chainlab/parallel.hpp"

namespace chainlab {

std::string_view to_string(InitKind kind) {
  switch (kind) {
    case InitKind::overdispersed: return "overdispersed";
    case InitKind::fixed_points: return "fixed_points";
    case InitKind::standard_normal: return "standard_normal";
  }
  return "overdispersed";
}

InitKind parse_init_kind(std::string_view token) {
  if (token == "overdispersed") return InitKind::overdispersed;
  if (token == "fixed_points" || token == "fixed-points") return InitKind::fixed_points;
  if (token == "standard_normal" || token == "standard-normal") return InitKind::standard_normal;
  throw InvalidArgument("unknown init strategy '" + std::string(token) + "'");
}

std::string_view to_string(StoppingReason reason) {
  switch (reason) {
    case StoppingReason::fixed_budget: return "fixed-budget";
    case StoppingReason::target_met: return "target-met";
    case StoppingReason::budget_exhausted: return "budget-exhausted";
  }
  return "fixed-budget";
}

void validate(const RunConfig& config) {
  if (config.chains == 0) throw InvalidArgument("config: chains must be positive");
  if (config.sampling == 0) throw InvalidArgument("config: sampling length must be positive");
  if (config.groups == 0 || config.chains % config.groups != 0) {
    throw InvalidArgument("config: groups must be positive and divide chains");
  }
  if (!(config.rhat_threshold > 0.0)) throw InvalidArgument("config: rhat_threshold must be positive");
  if (config.target_ess && !(*config.target_ess > 0.0)) {
    throw InvalidArgument("config: target_ess must be positive");
  }
  if (config.init.kind == InitKind::fixed_points && config.init.points.size() != config.groups) {
    throw InvalidArgument("config: fixed_points needs exactly one point per group (" +
                          std::to_string(config.groups) + "), got " +
                          std::to_string(config.init.points.size()));
  }
}

std::vector<ChainInit> initialize(const RunConfig& config, const TargetModel& model) {
  validate(config);
  const std::size_t d = model.dimension();
  double scale = config.init.scale;
  if (!(scale > 0.0)) {
    scale = 10.0;
    if (const auto& sd = model.analytic_marginal_sd()) {
      scale = 4.0 * *std::max_element(sd->begin(), sd->end());
    }
  }
  const bool grouped = config.groups >= 2 || config.init.kind == InitKind::fixed_points;
  const std::size_t per_group = config.chains / config.groups;

  auto start_point = [&](std::size_t key_index, std::size_t group) {
    if (config.init.kind == InitKind::fixed_points) {
      const auto& p = config.init.points[group];
      if (p.size() != d) throw InvalidArgument("fixed point has wrong dimension");
      return p;
    }
    RngStream rng = derive_stream(config.root_seed, key_index, StreamPurpose::initialization, 0);
    const double s = config.init.kind == InitKind::overdispersed ? scale : 1.0;
    Vector theta(d);
    for (auto& v : theta) v = s * rng.normal();
    return theta;
  };

  std::vector<ChainInit> out(config.chains);
  std::vector<Vector> group_points;
  if (grouped) {
    for (std::size_t k = 0; k < config.groups; ++k) group_points.push_back(start_point(k, k));
  }
  for (std::size_t m = 0; m < config.chains; ++m) {
    auto& c = out[m];
    c.group = config.groups >= 2 ? m / per_group : 0;
    c.theta0 = grouped ? group_points[c.group] : start_point(m, 0);
    c.rng = derive_chain_rng(config.root_seed, m);
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Acceptance probability of one trial transition from `state`; the chain
// itself does not move. HMC trials use a single leapfrog step.
double trial_acceptance(SamplerKind kind, const TargetModel& model, const ChainState& state,
                        TuningState tuning, double step_size, const RngStream& rng,
                        std::uint64_t& evaluations) {
  ChainState copy = state;
  copy.rng = rng;
  copy.gradient_evaluations = 0;
  tuning.step_size = step_size;
  tuning.num_leapfrog_steps = 1;
  copy = transition(kind, model, std::move(copy), tuning);
  evaluations += copy.gradient_evaluations;
  return copy.last_accept_prob;
}

// Doubles or halves the step size until the single-transition acceptance
// probability crosses 1/2.
double find_step_size(SamplerKind kind, const TargetModel& model, const ChainState& state,
                      const TuningState& tuning, const RngStream& rng, std::uint64_t& evaluations) {
  double eps = tuning.step_size;
  const double a0 = trial_acceptance(kind, model, state, tuning, eps, rng, evaluations);
  const bool grow = a0 > 0.5;
  for (int k = 0; k < 60; ++k) {
    const double next = grow ? 2.0 * eps : 0.5 * eps;
    const double a = trial_acceptance(kind, model, state, tuning, next, rng, evaluations);
    if (grow ? a < 0.5 : a > 0.5) return grow ? eps : next;
    eps = next;
  }
  return eps;
}

// Acceptance-weighted squared jump, in preconditioned units, after each of
// the first `max_steps` leapfrog steps of one HMC trajectory. Entries after a
// divergence stay zero.
Vector trial_jump_profile(const TargetModel& model, const ChainState& state,
                          const TuningState& tuning, int max_steps, RngStream rng,
                          std::uint64_t& evaluations) {
  const std::size_t d = model.dimension();
  const auto& precond = tuning.diag_preconditioner;
  Vector momentum(d);
  for (std::size_t i = 0; i < d; ++i) momentum[i] = rng.normal() / std::sqrt(precond[i]);
  const double h0 = -state.last_log_density + kinetic_energy(momentum, precond);
  Vector profile(static_cast<std::size_t>(max_steps), 0.0);
  LeapfrogResult lf;
  lf.position = state.position;
  lf.momentum = momentum;
  lf.gradient = state.last_gradient;
  for (int s = 0; s < max_steps; ++s) {
    lf = leapfrog(model, lf.position, lf.momentum, lf.gradient, tuning.step_size, 1, precond);
    evaluations += static_cast<std::uint64_t>(lf.gradient_evaluations);
    if (lf.divergent) break;
    const double delta_h = -lf.log_density + kinetic_energy(lf.momentum, precond) - h0;
    if (!std::isfinite(delta_h) || std::abs(delta_h) > kDivergenceThreshold) break;
    double jump = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double z = lf.position[i] - state.position[i];
      jump += z * z / precond[i];
    }
    profile[static_cast<std::size_t>(s)] = acceptance_probability(delta_h) * jump;
  }
  return profile;
}

// Expected squared jump per expected gradient evaluation of an HMC transition
// whose length is jittered uniformly on {1, ..., max_steps}.
double jittered_jump_rate(std::span<const double> profile, int max_steps) {
  double sum = 0.0;
  for (int s = 0; s < max_steps; ++s) sum += profile[static_cast<std::size_t>(s)];
  const double mean_jump = sum / max_steps;
  return mean_jump / (0.5 * (max_steps + 1));
}

class RunContext {
 public:
  RunContext(const RunConfig& config, const TargetModel& model, const ExecutionOptions& exec)
      : config_(config), model_(model), threads_(exec.threads), d_(model.dimension()) {}

  void start() {
    const auto inits = initialize(config_, model_);
    const std::size_t m_count = config_.chains;
    states_.resize(m_count);
    draws_.assign(m_count, {});
    group_of_chain_.resize(m_count);
    for (std::size_t m = 0; m < m_count; ++m) group_of_chain_[m] = inits[m].group;
    parallel_for(m_count, threads_, [&](std::size_t m) {
      states_[m] = make_chain_state(model_, inits[m].theta0, inits[m].rng);
      bool finite = std::isfinite(states_[m].last_log_density);
      for (double g : states_[m].last_gradient) finite = finite && std::isfinite(g);
      if (!finite) {
        std::ostringstream os;
        os.precision(17);
        os << "model evaluation failed at the initial point of chain " << m << ": (";
        for (std::size_t i = 0; i < inits[m].theta0.size(); ++i) {
          os << (i ? ", " : "") << inits[m].theta0[i];
        }
        os << ")";
        throw RuntimeFailure(os.str());
      }
    });
    tunings_.assign(m_count, make_tuning(d_, 1.0, 8));
    tune_at_boundary(0, /*metric_updated=*/true);
  }

  void warmup() {
    const auto schedule = warmup_schedule(config_.warmup);
    for (std::size_t w = 0; w < schedule.size(); ++w) {
      const auto& window = schedule[w];
      std::vector<ChainWindow> windows(config_.chains);
      advance(window.begin, window.end, StreamPurpose::warmup, &windows);
      tunings_ = adapt_update(tunings_, windows, config_.adaptation, window.update_metric);
      const bool last = w + 1 == schedule.size();
      if (!last) tune_at_boundary(w + 1, window.update_metric);

      WindowRecord rec;
      rec.begin = window.begin;
      rec.end = window.end;
      rec.metric_updated = window.update_metric;
      for (const auto& s : states_) rec.gradient_evaluations.push_back(s.gradient_evaluations);
      rec.step_size = tunings_.front().step_size;
      rec.num_leapfrog_steps = tunings_.front().num_leapfrog_steps;
      windows_.push_back(std::move(rec));
    }
    for (auto& t : tunings_) freeze(t);
    for (const auto& t : tunings_) tuning_at_freeze_.push_back(serialize(t));
  }

  void sample(std::size_t begin, std::size_t end) {
    advance(config_.warmup + begin, config_.warmup + end, StreamPurpose::sampling, nullptr);
    sampled_ = end;
  }

  std::size_t sampled() const { return sampled_; }

  ChainMatrix matrix() const {
    ChainMatrix out(config_.chains, config_.warmup, sampled_, d_, group_of_chain_);
    for (std::size_t m = 0; m < config_.chains; ++m) {
      std::copy(draws_[m].begin(), draws_[m].end(),
                out.draw(m, 0).data());
      auto& meta = out.metadata()[m];
      meta.seed = derive_chain_rng(config_.root_seed, m).key();
      meta.divergences = states_[m].divergences;
      meta.acceptance_rate = sampled_ == 0 ? 0.0
                                           : static_cast<double>(sampling_accepts_[m]) /
                                                 static_cast<double>(sampled_);
      meta.gradient_evaluations = states_[m].gradient_evaluations;
    }
    return out;
  }

  const std::vector<TuningState>& tunings() const { return tunings_; }
  const std::vector<ChainState>& states() const { return states_; }
  std::vector<WindowRecord> take_windows() { return std::move(windows_); }
  std::vector<std::vector<std::uint64_t>> take_warmup_trace() { return std::move(warmup_trace_); }
  std::vector<std::string> take_freeze_snapshot() { return std::move(tuning_at_freeze_); }

 private:
  // Runs iterations [begin, end) of every chain; each chain's variates come
  // from a stream keyed by (root seed, chain, phase, iteration).
  void advance(std::size_t begin, std::size_t end, StreamPurpose purpose,
               std::vector<ChainWindow>* windows) {
    if (sampling_accepts_.empty()) sampling_accepts_.assign(config_.chains, 0);
    if (warmup_trace_.empty()) warmup_trace_.assign(config_.chains, {});
    const double target = target_acceptance(config_.sampler);
    parallel_for(config_.chains, threads_, [&](std::size_t m) {
      auto& state = states_[m];
      auto& tuning = tunings_[m];
      auto& out = draws_[m];
      out.reserve((config_.warmup + config_.sampling) * d_);
      ChainWindow* window = windows ? &(*windows)[m] : nullptr;
      if (window) window->dimension = d_;
      double accept_sum = 0.0;
      for (std::size_t it = begin; it < end; ++it) {
        state.rng = derive_stream(config_.root_seed, m, purpose, it);
        const std::uint64_t accepted_before = state.accept_count;
        state = transition(config_.sampler, model_, std::move(state), tuning);
        out.insert(out.end(), state.position.begin(), state.position.end());
        if (window) {
          warmup_trace_[m].push_back(state.gradient_evaluations);
          dual_averaging_observe(tuning, state.last_accept_prob, target);
          window->push(state.position);
          accept_sum += state.last_accept_prob;
        } else if (state.accept_count > accepted_before) {
          ++sampling_accepts_[m];
        }
      }
      if (window && end > begin) window->mean_accept_prob = accept_sum / static_cast<double>(end - begin);
    });
  }

  // Step-size search after a metric change, then leapfrog-length selection.
  void tune_at_boundary(std::size_t boundary, bool metric_updated) {
    const std::size_t m_count = config_.chains;
    if (metric_updated) {
      Vector steps(m_count);
      parallel_for(m_count, threads_, [&](std::size_t m) {
        const RngStream rng =
            derive_stream(config_.root_seed, m, StreamPurpose::step_size_search, boundary);
        steps[m] = find_step_size(config_.sampler, model_, states_[m], tunings_[m], rng,
                                  states_[m].gradient_evaluations);
      });
      if (config_.adaptation == AdaptationMode::cross_chain) {
        double log_mean = 0.0;
        for (double s : steps) log_mean += std::log(s);
        std::fill(steps.begin(), steps.end(), std::exp(log_mean / static_cast<double>(m_count)));
      }
      for (std::size_t m = 0; m < m_count; ++m) tunings_[m].step_size = steps[m];
    }
    if (config_.sampler == SamplerKind::hmc) select_leapfrog_steps(boundary);
    for (auto& t : tunings_) dual_averaging_restart(t);
  }

  // Picks the candidate length with the largest expected squared jump per
  // gradient evaluation. One trial trajectory of the longest candidate length
  // per chain scores every candidate, since each shorter jittered trajectory
  // is a prefix of it. Cross-chain mode pools the trials of all chains.
  void select_leapfrog_steps(std::size_t boundary) {
    const std::size_t m_count = config_.chains;
    const std::size_t c_count = kLeapfrogCandidates.size();
    const int longest = kLeapfrogCandidates.back();
    std::vector<Vector> score(m_count, Vector(c_count, 0.0));
    parallel_for(m_count, threads_, [&](std::size_t m) {
      const RngStream rng = derive_stream(config_.root_seed, m, StreamPurpose::probe, boundary);
      const Vector profile = trial_jump_profile(model_, states_[m], tunings_[m], longest, rng,
                                                states_[m].gradient_evaluations);
      for (std::size_t c = 0; c < c_count; ++c) {
        score[m][c] = jittered_jump_rate(profile, kLeapfrogCandidates[c]);
      }
    });
    auto best_of = [&](const Vector& s) {
      return kLeapfrogCandidates[static_cast<std::size_t>(
          std::max_element(s.begin(), s.end()) - s.begin())];
    };
    if (config_.adaptation == AdaptationMode::cross_chain) {
      Vector pooled(c_count, 0.0);
      for (const auto& s : score) {
        for (std::size_t c = 0; c < c_count; ++c) pooled[c] += s[c];
      }
      const int best = best_of(pooled);
      for (auto& t : tunings_) t.num_leapfrog_steps = best;
    } else {
      for (std::size_t m = 0; m < m_count; ++m) tunings_[m].num_leapfrog_steps = best_of(score[m]);
    }
  }

  const RunConfig& config_;
  const TargetModel& model_;
  std::size_t threads_;
  std::size_t d_;
  std::vector<ChainState> states_;
  std::vector<TuningState> tunings_;
  std::vector<std::vector<double>> draws_;
  std::vector<std::size_t> group_of_chain_;
  std::vector<std::uint64_t> sampling_accepts_;
  std::vector<WindowRecord> windows_;
  std::vector<std::vector<std::uint64_t>> warmup_trace_;
  std::vector<std::string> tuning_at_freeze_;
  std::size_t sampled_ = 0;
};

RunResult finish(RunContext& ctx, const RunConfig& config, const TargetModel& model,
                 std::span<const QuantityOfInterest> quantities, std::uint64_t counter_before,
                 PhaseTimes times, StoppingReason reason) {
  RunResult r;
  r.draws = ctx.matrix();
  r.tunings = ctx.tunings();
  for (const auto& s : ctx.states()) r.gradient_evaluations.push_back(s.gradient_evaluations);
  r.model_gradient_evaluations = model.gradient_evaluations() - counter_before;
  r.wall_time = times;
  r.report = summarize(r.draws, quantities, config.rhat_threshold);
  r.stopping_reason = reason;
  r.warmup_windows = ctx.take_windows();
  r.warmup_gradient_trace = ctx.take_warmup_trace();
  r.tuning_at_freeze = ctx.take_freeze_snapshot();
  return r;
}

}  // namespace

RunResult run(const RunConfig& config, const TargetModel& model,
              std::span<const QuantityOfInterest> quantities, const ExecutionOptions& exec) {
  validate(config);
  const std::uint64_t counter_before = model.gradient_evaluations();
  RunContext ctx(config, model, exec);
  PhaseTimes times;
  auto t0 = Clock::now();
  ctx.start();
  ctx.warmup();
  times.warmup_seconds = seconds_since(t0);
  t0 = Clock::now();
  ctx.sample(0, config.sampling);
  times.sampling_seconds = seconds_since(t0);
  return finish(ctx, config, model, quantities, counter_before, times, StoppingReason::fixed_budget);
}

RunResult run_many_short(const RunConfig& config, const TargetModel& model,
                         std::span<const QuantityOfInterest> quantities,
                         const ExecutionOptions& exec) {
  if (config.sampling < 1) throw InvalidArgument("run_many_short: sampling length must be >= 1");
  return run(config, model, quantities, exec);
}

RunResult run_adaptive(const RunConfig& config, const TargetModel& model,
                       std::span<const QuantityOfInterest> quantities,
                       const ExecutionOptions& exec) {
  validate(config);
  if (!config.target_ess) throw InvalidArgument("run_adaptive: target_ess must be set");
  if (config.max_total_iterations <= config.warmup) {
    throw InvalidArgument("run_adaptive: max_total_iterations leaves no room for sampling");
  }
  const std::size_t budget = config.max_total_iterations - config.warmup;
  const std::uint64_t counter_before = model.gradient_evaluations();
  RunContext ctx(config, model, exec);
  PhaseTimes times;
  auto t0 = Clock::now();
  ctx.start();
  ctx.warmup();
  times.warmup_seconds = seconds_since(t0);

  t0 = Clock::now();
  std::size_t increment = kAdaptiveFirstIncrement;
  StoppingReason reason = StoppingReason::budget_exhausted;
  while (ctx.sampled() < budget) {
    const std::size_t end = std::min(budget, ctx.sampled() + increment);
    ctx.sample(ctx.sampled(), end);
    increment *= 2;
    const auto report = summarize(ctx.matrix(), quantities, config.rhat_threshold);
    const double min_ess = report.min_ess();
    const double max_rhat = report.max_rhat();
    if (min_ess >= *config.target_ess && max_rhat <= 1.0 + config.rhat_threshold) {
      reason = StoppingReason::target_met;
      break;
    }
  }
  times.sampling_seconds = seconds_since(t0);
  RunResult r = finish(ctx, config, model, quantities, counter_before, times, reason);
  if (reason == StoppingReason::budget_exhausted) {
    for (auto& q : r.report.quantities) {
      if (!(q.ess >= *config.target_ess) && !q.has_flag(flag::low_ess)) {
        q.flags.emplace_back(flag::low_ess);
      }
    }
  }
  return r;
}

}  // namespace chainlab

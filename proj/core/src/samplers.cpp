#include "chainlab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "chainlab/errors.hpp"

namespace chainlab {

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::rwm: return "rwm";
    case SamplerKind::mala: return "mala";
    case SamplerKind::hmc: return "hmc";
  }
  return "hmc";
}

std::string_view to_string(AdaptationMode mode) {
  return mode == AdaptationMode::cross_chain ? "cross-chain" : "per-chain";
}

SamplerKind parse_sampler_kind(std::string_view token) {
  if (token == "rwm") return SamplerKind::rwm;
  if (token == "mala") return SamplerKind::mala;
  if (token == "hmc") return SamplerKind::hmc;
  throw InvalidArgument("unknown sampler '" + std::string(token) + "' (rwm|mala|hmc)");
}

AdaptationMode parse_adaptation_mode(std::string_view token) {
  if (token == "per-chain" || token == "per_chain") return AdaptationMode::per_chain;
  if (token == "cross-chain" || token == "cross_chain") return AdaptationMode::cross_chain;
  throw InvalidArgument("unknown adaptation mode '" + std::string(token) +
                        "' (per-chain|cross-chain)");
}

double target_acceptance(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::rwm: return 0.234;
    case SamplerKind::mala: return 0.574;
    case SamplerKind::hmc: return 0.80;
  }
  return 0.80;
}

TuningState make_tuning(std::size_t dimension, double step_size, int num_leapfrog_steps) {
  TuningState t;
  t.step_size = step_size;
  t.diag_preconditioner.assign(dimension, 1.0);
  t.num_leapfrog_steps = num_leapfrog_steps;
  t.dual_avg.shrinkage_target = std::log(10.0 * step_size);
  t.dual_avg.log_step_average = std::log(step_size);
  validate(t, dimension);
  return t;
}

void validate(const TuningState& tuning, std::size_t dimension) {
  if (!(tuning.step_size > 0.0) || !std::isfinite(tuning.step_size)) {
    throw InvalidArgument("tuning: step size must be positive and finite");
  }
  if (tuning.diag_preconditioner.size() != dimension) {
    throw InvalidArgument("tuning: preconditioner has wrong dimension");
  }
  for (double v : tuning.diag_preconditioner) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("tuning: preconditioner entries must be positive and finite");
    }
  }
  if (tuning.num_leapfrog_steps < 1) {
    throw InvalidArgument("tuning: leapfrog steps must be positive");
  }
}

std::string serialize(const TuningState& tuning) {
  std::string out;
  char buf[64];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += key;
    out += '=';
    out += buf;
    out += ';';
  };
  put("step_size", tuning.step_size);
  put("leapfrog", tuning.num_leapfrog_steps);
  put("frozen", tuning.frozen ? 1 : 0);
  put("mu", tuning.dual_avg.shrinkage_target);
  put("log_step_avg", tuning.dual_avg.log_step_average);
  put("grad_avg", tuning.dual_avg.gradient_average);
  put("da_iter", static_cast<double>(tuning.dual_avg.iteration));
  out += "precond=";
  for (double v : tuning.diag_preconditioner) {
    std::snprintf(buf, sizeof buf, "%.17g,", v);
    out += buf;
  }
  return out;
}

ChainState make_chain_state(const TargetModel& model, Vector position, RngStream rng) {
  ChainState s;
  s.position = std::move(position);
  s.rng = rng;
  s.last_gradient.assign(model.dimension(), 0.0);
  s.last_log_density = model.log_density_gradient(s.position, s.last_gradient);
  s.gradient_evaluations = 1;
  return s;
}

double kinetic_energy(std::span<const double> momentum, std::span<const double> preconditioner) {
  double k = 0.0;
  for (std::size_t i = 0; i < momentum.size(); ++i) {
    k += momentum[i] * momentum[i] * preconditioner[i];
  }
  return 0.5 * k;
}

double acceptance_probability(double delta_h) {
  if (std::isnan(delta_h)) return 0.0;
  if (delta_h <= 0.0) return 1.0;
  return std::exp(-delta_h);
}

LeapfrogResult leapfrog(const TargetModel& model, std::span<const double> position,
                        std::span<const double> momentum, std::span<const double> gradient,
                        double step_size, int steps, std::span<const double> preconditioner) {
  const std::size_t d = model.dimension();
  if (position.size() != d || momentum.size() != d || gradient.size() != d ||
      preconditioner.size() != d) {
    throw InvalidArgument("leapfrog: dimension mismatch");
  }
  if (!(step_size > 0.0) || steps < 1) {
    throw InvalidArgument("leapfrog: step size and step count must be positive");
  }
  LeapfrogResult r;
  r.position.assign(position.begin(), position.end());
  r.momentum.assign(momentum.begin(), momentum.end());
  r.gradient.assign(gradient.begin(), gradient.end());
  const double half = 0.5 * step_size;
  for (std::size_t i = 0; i < d; ++i) r.momentum[i] += half * r.gradient[i];
  for (int s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < d; ++i) {
      r.position[i] += step_size * preconditioner[i] * r.momentum[i];
    }
    r.log_density = model.log_density_gradient(r.position, r.gradient);
    ++r.gradient_evaluations;
    bool finite = std::isfinite(r.log_density);
    for (std::size_t i = 0; finite && i < d; ++i) finite = std::isfinite(r.gradient[i]);
    if (!finite) {
      r.divergent = true;
      return r;
    }
    const double kick = (s + 1 == steps) ? half : step_size;
    for (std::size_t i = 0; i < d; ++i) r.momentum[i] += kick * r.gradient[i];
  }
  return r;
}

LeapfrogResult leapfrog(const TargetModel& model, std::span<const double> position,
                        std::span<const double> momentum, double step_size, int steps,
                        std::span<const double> preconditioner) {
  Vector gradient(model.dimension());
  model.log_density_gradient(position, gradient);
  auto r = leapfrog(model, position, momentum, gradient, step_size, steps, preconditioner);
  ++r.gradient_evaluations;
  return r;
}

namespace {

void record(ChainState& state, double accept_prob, bool accepted, bool divergent) {
  ++state.step_count;
  state.last_accept_prob = accept_prob;
  state.last_divergent = divergent;
  if (divergent) ++state.divergences;
  if (accepted) ++state.accept_count;
}

}  // namespace

int jittered_leapfrog_steps(double u, int max_steps) {
  const int steps = 1 + static_cast<int>(u * static_cast<double>(max_steps));
  return std::clamp(steps, 1, max_steps);
}

ChainState hmc_step(const TargetModel& model, ChainState state, const TuningState& tuning) {
  const std::size_t d = model.dimension();
  const auto& precond = tuning.diag_preconditioner;
  const int steps = jittered_leapfrog_steps(state.rng.uniform(), tuning.num_leapfrog_steps);
  Vector momentum(d);
  for (std::size_t i = 0; i < d; ++i) momentum[i] = state.rng.normal() / std::sqrt(precond[i]);
  const double h0 = -state.last_log_density + kinetic_energy(momentum, precond);

  auto lf = leapfrog(model, state.position, momentum, state.last_gradient, tuning.step_size, steps,
                     precond);
  state.gradient_evaluations += static_cast<std::uint64_t>(lf.gradient_evaluations);
  // The uniform is drawn unconditionally so variate consumption never depends
  // on the outcome.
  const double u = state.rng.uniform();
  if (lf.divergent) {
    record(state, 0.0, false, true);
    return state;
  }
  const double h1 = -lf.log_density + kinetic_energy(lf.momentum, precond);
  const double delta_h = h1 - h0;
  if (!std::isfinite(delta_h) || std::abs(delta_h) > kDivergenceThreshold) {
    record(state, 0.0, false, true);
    return state;
  }
  const double alpha = acceptance_probability(delta_h);
  const bool accept = u < alpha;
  if (accept) {
    state.position = std::move(lf.position);
    state.last_log_density = lf.log_density;
    state.last_gradient = std::move(lf.gradient);
  }
  record(state, alpha, accept, false);
  return state;
}

Vector mala_proposal_mean(std::span<const double> position, std::span<const double> gradient,
                          const TuningState& tuning) {
  const double half_eps2 = 0.5 * tuning.step_size * tuning.step_size;
  Vector mean(position.size());
  for (std::size_t i = 0; i < position.size(); ++i) {
    mean[i] = position[i] + half_eps2 * tuning.diag_preconditioner[i] * gradient[i];
  }
  return mean;
}

double mala_log_proposal(std::span<const double> to, std::span<const double> from,
                         std::span<const double> from_gradient, const TuningState& tuning) {
  const Vector mean = mala_proposal_mean(from, from_gradient, tuning);
  const double eps2 = tuning.step_size * tuning.step_size;
  double lq = 0.0;
  for (std::size_t i = 0; i < to.size(); ++i) {
    const double z = to[i] - mean[i];
    lq -= z * z / (2.0 * eps2 * tuning.diag_preconditioner[i]);
  }
  return lq;
}

double mala_acceptance(std::span<const double> from, double from_log_density,
                       std::span<const double> from_gradient, std::span<const double> to,
                       double to_log_density, std::span<const double> to_gradient,
                       const TuningState& tuning) {
  const double log_ratio = to_log_density - from_log_density +
                           mala_log_proposal(from, to, to_gradient, tuning) -
                           mala_log_proposal(to, from, from_gradient, tuning);
  return acceptance_probability(-log_ratio);
}

ChainState mala_step(const TargetModel& model, ChainState state, const TuningState& tuning) {
  const std::size_t d = model.dimension();
  Vector proposal = mala_proposal_mean(state.position, state.last_gradient, tuning);
  for (std::size_t i = 0; i < d; ++i) {
    proposal[i] += tuning.step_size * std::sqrt(tuning.diag_preconditioner[i]) * state.rng.normal();
  }
  const double u = state.rng.uniform();
  Vector gradient(d);
  const double lp = model.log_density_gradient(proposal, gradient);
  ++state.gradient_evaluations;
  bool finite = std::isfinite(lp);
  for (std::size_t i = 0; finite && i < d; ++i) finite = std::isfinite(gradient[i]);
  if (!finite) {
    record(state, 0.0, false, true);
    return state;
  }
  const double alpha = mala_acceptance(state.position, state.last_log_density,
                                       state.last_gradient, proposal, lp, gradient, tuning);
  const bool accept = u < alpha;
  if (accept) {
    state.position = std::move(proposal);
    state.last_log_density = lp;
    state.last_gradient = std::move(gradient);
  }
  record(state, alpha, accept, false);
  return state;
}

ChainState rwm_step(const TargetModel& model, ChainState state, const TuningState& tuning) {
  const std::size_t d = model.dimension();
  Vector proposal(d);
  for (std::size_t i = 0; i < d; ++i) {
    proposal[i] = state.position[i] +
                  tuning.step_size * std::sqrt(tuning.diag_preconditioner[i]) * state.rng.normal();
  }
  const double u = state.rng.uniform();
  const double lp = model.log_density(proposal);
  if (!std::isfinite(lp)) {
    record(state, 0.0, false, !std::isinf(lp) || lp > 0);
    return state;
  }
  const double alpha = acceptance_probability(state.last_log_density - lp);
  const bool accept = u < alpha;
  if (accept) {
    state.position = std::move(proposal);
    state.last_log_density = lp;
  }
  record(state, alpha, accept, false);
  return state;
}

ChainState transition(SamplerKind kind, const TargetModel& model, ChainState state,
                      const TuningState& tuning) {
  switch (kind) {
    case SamplerKind::rwm: return rwm_step(model, std::move(state), tuning);
    case SamplerKind::mala: return mala_step(model, std::move(state), tuning);
    case SamplerKind::hmc: return hmc_step(model, std::move(state), tuning);
  }
  return state;
}

}  // namespace chainlab

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "chainlab/model.hpp"
#include "chainlab/rng.hpp"

namespace chainlab {

enum class SamplerKind { rwm, mala, hmc };
enum class AdaptationMode { per_chain, cross_chain };

std::string_view to_string(SamplerKind kind);
std::string_view to_string(AdaptationMode mode);
SamplerKind parse_sampler_kind(std::string_view token);        // rwm | mala | hmc
AdaptationMode parse_adaptation_mode(std::string_view token);  // per-chain | cross-chain

// Optimal-scaling acceptance targets: 0.234 (RWM), 0.574 (MALA), 0.80 (HMC).
double target_acceptance(SamplerKind kind);

inline constexpr double kDivergenceThreshold = 1000.0;
inline constexpr std::array<int, 6> kLeapfrogCandidates{1, 2, 4, 8, 16, 32};

struct DualAveragingState {
  double shrinkage_target = 0.0;  // mu = log(10 * eps0)
  double log_step_average = 0.0;  // log of the iterate-averaged step size
  double gradient_average = 0.0;  // running mean of (target - accept)
  std::uint64_t iteration = 0;
};

struct TuningState {
  double step_size = 1.0;
  Vector diag_preconditioner;  // inverse mass matrix diagonal
  int num_leapfrog_steps = 8;
  bool frozen = false;
  DualAveragingState dual_avg;
};

TuningState make_tuning(std::size_t dimension, double step_size, int num_leapfrog_steps = 8);
void validate(const TuningState& tuning, std::size_t dimension);

// Stable text form used to check that frozen tuning never changes.
std::string serialize(const TuningState& tuning);

struct ChainState {
  Vector position;
  RngStream rng;
  std::uint64_t accept_count = 0;
  std::uint64_t step_count = 0;
  double last_log_density = 0.0;
  Vector last_gradient;
  double last_accept_prob = 0.0;
  std::uint64_t divergences = 0;
  std::uint64_t gradient_evaluations = 0;
  bool last_divergent = false;
};

// Evaluates the model at `position` and caches density and gradient.
ChainState make_chain_state(const TargetModel& model, Vector position, RngStream rng);

struct LeapfrogResult {
  Vector position;
  Vector momentum;
  double log_density = 0.0;
  Vector gradient;
  bool divergent = false;
  int gradient_evaluations = 0;
};

// `steps` leapfrog updates for H(q, p) = -log p(q) + p' P p / 2 with P the
// diagonal preconditioner. `gradient` is the gradient of log p at q.
LeapfrogResult leapfrog(const TargetModel& model, std::span<const double> position,
                        std::span<const double> momentum, std::span<const double> gradient,
                        double step_size, int steps, std::span<const double> preconditioner);

// Convenience overload that evaluates the starting gradient itself.
LeapfrogResult leapfrog(const TargetModel& model, std::span<const double> position,
                        std::span<const double> momentum, double step_size, int steps,
                        std::span<const double> preconditioner);

double kinetic_energy(std::span<const double> momentum, std::span<const double> preconditioner);

// min(1, exp(-delta_h)); 0 for non-finite input.
double acceptance_probability(double delta_h);

// Trajectory length for one HMC transition: uniform on {1, ..., max_steps}
// given u in [0, 1). Jittering the length keeps a fixed step size from
// landing on a periodic orbit of the integrator.
int jittered_leapfrog_steps(double u, int max_steps);

// num_leapfrog_steps is the upper end of the jittered trajectory length.
ChainState hmc_step(const TargetModel& model, ChainState state, const TuningState& tuning);
ChainState mala_step(const TargetModel& model, ChainState state, const TuningState& tuning);
ChainState rwm_step(const TargetModel& model, ChainState state, const TuningState& tuning);
ChainState transition(SamplerKind kind, const TargetModel& model, ChainState state,
                      const TuningState& tuning);

// Mean of the MALA proposal from position q with cached gradient.
Vector mala_proposal_mean(std::span<const double> position, std::span<const double> gradient,
                          const TuningState& tuning);

// log q(to | from) for the MALA proposal, up to a constant shared by both
// directions.
double mala_log_proposal(std::span<const double> to, std::span<const double> from,
                         std::span<const double> from_gradient, const TuningState& tuning);

// Metropolis-adjusted acceptance probability of moving from `from` to `to`.
double mala_acceptance(std::span<const double> from, double from_log_density,
                       std::span<const double> from_gradient, std::span<const double> to,
                       double to_log_density, std::span<const double> to_gradient,
                       const TuningState& tuning);

}  // namespace chainlab

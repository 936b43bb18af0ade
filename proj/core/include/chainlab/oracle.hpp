#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "chainlab/rng.hpp"

namespace chainlab {

// Langevin diffusion carrying normal(mu0, sigma0) to normal(mu, sigma) (an
// OU process with unit rate). sigma0 == 0 is a point-mass start.
struct OUProcessSpec {
  double mu0 = 0.0;
  double sigma0 = 1.0;
  double mu = 0.0;
  double sigma = 1.0;
};

void validate(const OUProcessSpec& spec);

struct NormalParams {
  double mean = 0.0;
  double sd = 1.0;
};

// mean = mu + (mu0 - mu) e^-t, sd = sqrt(sigma^2 + (sigma0^2 - sigma^2) e^-2t)
NormalParams ou_marginal(const OUProcessSpec& spec, double t);

// Exact transition over a time step delta.
double ou_exact_step(const OUProcessSpec& spec, double theta, double delta, RngStream& rng);

// Mean of an exact-OU path sampled every `delta` over (0, horizon], starting
// from theta0. Discrete stand-in for the continuous time average.
double ou_time_average(const OUProcessSpec& spec, double theta0, double horizon, double delta,
                       RngStream& rng);

double normal_cdf(double x);

// Points where the two normal densities are equal (0, 1 or 2 of them).
std::vector<double> normal_density_crossings(double mean1, double sd1, double mean2, double sd2);

// Total variation distance between two normals by adaptive Gauss-Kronrod
// quadrature of |p - q| / 2, split at the density crossings.
double tv_normal(double mean1, double sd1, double mean2, double sd2);

// Equal-sd closed form 2 Phi(|dm| / (2 sd)) - 1.
double tv_normal_equal_sd(double mean_difference, double sd);

// TV between the OU marginal at time t and the stationary law. A point mass
// (sd 0) is at distance 1.
double ou_tv_to_stationary(const OUProcessSpec& spec, double t);

// First time the OU marginal is within eps of the stationary law in TV,
// by bisection to 1e-8.
double relaxation_time(const OUProcessSpec& spec, double eps);

// Independent estimates, one per replicate run; `group` (optional) names the
// shared initialization of each replicate.
struct ReplicateStudy {
  std::vector<double> estimates;
  std::vector<std::size_t> group;
};

struct ErrorDecomposition {
  double mse = 0.0;
  double squared_bias = 0.0;
  double variance = 0.0;  // sample variance, denominator R - 1
};

// mse = squared_bias + variance (R - 1) / R holds as computed.
ErrorDecomposition error_decomposition(const ReplicateStudy& study, double truth);

struct VarianceDecomposition {
  double nonstationary = 0.0;  // sample variance of group means
  double persistent = 0.0;     // mean within-group sample variance
  double total = 0.0;          // nonstationary + persistent
  double pooled = 0.0;         // sample variance of all estimates
};

VarianceDecomposition variance_decomposition(const ReplicateStudy& study);

struct TwoStateAnalytics {
  double ess_per_draw = 0.0;     // q / (1 - q); +inf at q = 1
  double tv_decay_factor = 0.0;  // |1 - 2q|
};

// Symmetric two-state chain that switches state with probability q.
TwoStateAnalytics two_state_analytics(double q);

// State indicators of a stationary-start run of the two-state chain.
std::vector<double> simulate_two_state(double q, std::size_t steps, RngStream rng);

// ESS per draw measured by the multi-chain ESS estimator on one simulated chain.
double measured_two_state_ess_per_draw(double q, std::size_t steps, std::uint64_t seed);

struct OuDecayOptions {
  std::size_t groups = 200;
  std::size_t replicates_per_group = 5000;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

// One row per time point for the single-draw estimator theta(t).
struct OuDecayRow {
  double t = 0.0;
  double bias = 0.0;          // analytic, (mu0 - mu) e^-t
  double squared_bias = 0.0;  // analytic
  double nonstationary_var = 0.0;  // empirical, grouped replicates
  double persistent_var = 0.0;     // empirical
  double tv = 0.0;                 // analytic marginal vs stationary
  double empirical_bias = 0.0;     // mean of all replicates minus mu
};

// Groups start from points drawn from normal(mu0, sigma0); every replicate of
// a group starts at that point and is stepped exactly through the sorted
// time grid.
std::vector<OuDecayRow> ou_decay_study(const OUProcessSpec& spec, std::span<const double> times,
                                       const OuDecayOptions& options);

// Least-squares slope of y on x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace chainlab

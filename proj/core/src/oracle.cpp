#include "chainlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "chainlab/chain_matrix.hpp"
#include "chainlab/diagnostics.hpp"
#include "chainlab/errors.hpp"
#include "chainlab/parallel.hpp"

namespace chainlab {

namespace {

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

void validate(const OUProcessSpec& spec) {
  if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) {
    throw InvalidArgument("OU spec: sigma must be positive");
  }
  if (!(spec.sigma0 >= 0.0) || !std::isfinite(spec.sigma0)) {
    throw InvalidArgument("OU spec: sigma0 must be non-negative");
  }
  if (!std::isfinite(spec.mu) || !std::isfinite(spec.mu0)) {
    throw InvalidArgument("OU spec: means must be finite");
  }
}

NormalParams ou_marginal(const OUProcessSpec& spec, double t) {
  validate(spec);
  if (!(t >= 0.0)) throw InvalidArgument("ou_marginal: t must be non-negative");
  const double decay = std::exp(-t);
  const double var = spec.sigma * spec.sigma +
                     (spec.sigma0 * spec.sigma0 - spec.sigma * spec.sigma) * decay * decay;
  return {spec.mu + (spec.mu0 - spec.mu) * decay, std::sqrt(std::max(var, 0.0))};
}

double ou_exact_step(const OUProcessSpec& spec, double theta, double delta, RngStream& rng) {
  if (!(delta > 0.0)) throw InvalidArgument("ou_exact_step: delta must be positive");
  const double decay = std::exp(-delta);
  // -expm1(-2 delta) = 1 - e^{-2 delta} without cancellation for small delta.
  const double noise_sd = spec.sigma * std::sqrt(-std::expm1(-2.0 * delta));
  return spec.mu + (theta - spec.mu) * decay + noise_sd * rng.normal();
}

double ou_time_average(const OUProcessSpec& spec, double theta0, double horizon, double delta,
                       RngStream& rng) {
  if (!(horizon > 0.0) || !(delta > 0.0)) {
    throw InvalidArgument("ou_time_average: horizon and delta must be positive");
  }
  const auto steps = static_cast<std::size_t>(std::llround(horizon / delta));
  if (steps == 0) throw InvalidArgument("ou_time_average: horizon shorter than one step");
  double theta = theta0;
  double sum = 0.0;
  for (std::size_t n = 0; n < steps; ++n) {
    theta = ou_exact_step(spec, theta, delta, rng);
    sum += theta;
  }
  return sum / static_cast<double>(steps);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

std::vector<double> normal_density_crossings(double mean1, double sd1, double mean2, double sd2) {
  if (sd1 == sd2) {
    if (mean1 == mean2) return {};
    return {0.5 * (mean1 + mean2)};
  }
  const double a = 0.5 / (sd2 * sd2) - 0.5 / (sd1 * sd1);
  const double b = mean1 / (sd1 * sd1) - mean2 / (sd2 * sd2);
  const double c = mean2 * mean2 / (2.0 * sd2 * sd2) - mean1 * mean1 / (2.0 * sd1 * sd1) +
                   std::log(sd2 / sd1);
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {};
  const double root = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double qv = -0.5 * (b + std::copysign(root, b));
  std::vector<double> out;
  if (qv != 0.0) {
    out.push_back(qv / a);
    out.push_back(c / qv);
  } else {
    out.push_back(-b / (2.0 * a));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double tv_normal(double mean1, double sd1, double mean2, double sd2) {
  if (!(sd1 > 0.0) || !(sd2 > 0.0)) throw InvalidArgument("tv_normal: sds must be positive");
  if (mean1 == mean2 && sd1 == sd2) return 0.0;
  const double lo = std::min(mean1 - 12.0 * sd1, mean2 - 12.0 * sd2);
  const double hi = std::max(mean1 + 12.0 * sd1, mean2 + 12.0 * sd2);
  std::vector<double> cuts{lo};
  for (double x : normal_density_crossings(mean1, sd1, mean2, sd2)) {
    if (x > lo && x < hi) cuts.push_back(x);
  }
  cuts.push_back(hi);
  auto integrand = [&](double x) {
    return std::abs(normal_pdf(x, mean1, sd1) - normal_pdf(x, mean2, sd2));
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, cuts[i],
                                                                            cuts[i + 1], 15, 1e-13);
  }
  return std::clamp(0.5 * total, 0.0, 1.0);
}

double tv_normal_equal_sd(double mean_difference, double sd) {
  if (!(sd > 0.0)) throw InvalidArgument("tv_normal_equal_sd: sd must be positive");
  return 2.0 * normal_cdf(std::abs(mean_difference) / (2.0 * sd)) - 1.0;
}

double ou_tv_to_stationary(const OUProcessSpec& spec, double t) {
  const auto m = ou_marginal(spec, t);
  if (!(m.sd > 0.0)) return 1.0;
  return tv_normal(m.mean, m.sd, spec.mu, spec.sigma);
}

double relaxation_time(const OUProcessSpec& spec, double eps) {
  validate(spec);
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("relaxation_time: eps must lie in (0, 1)");
  if (ou_tv_to_stationary(spec, 0.0) <= eps) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (ou_tv_to_stationary(spec, hi) > eps) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4) throw RuntimeFailure("relaxation_time: no crossing found");
  }
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    if (ou_tv_to_stationary(spec, mid) <= eps) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

ErrorDecomposition error_decomposition(const ReplicateStudy& study, double truth) {
  const auto& x = study.estimates;
  if (x.size() < 2) throw InvalidArgument("error_decomposition: need at least 2 replicates");
  ErrorDecomposition out;
  for (double v : x) out.mse += (v - truth) * (v - truth);
  out.mse /= static_cast<double>(x.size());
  const double bias = mean_of(x) - truth;
  out.squared_bias = bias * bias;
  out.variance = sample_variance(x);
  return out;
}

VarianceDecomposition variance_decomposition(const ReplicateStudy& study) {
  if (study.group.size() != study.estimates.size()) {
    throw InvalidArgument("variance_decomposition: one group id per replicate required");
  }
  std::map<std::size_t, std::vector<double>> groups;
  for (std::size_t r = 0; r < study.estimates.size(); ++r) {
    groups[study.group[r]].push_back(study.estimates[r]);
  }
  if (groups.size() < 2) throw InvalidArgument("variance_decomposition: need at least 2 groups");
  std::vector<double> group_means;
  double persistent = 0.0;
  for (const auto& [k, values] : groups) {
    if (values.size() < 2) {
      throw InvalidArgument("variance_decomposition: every group needs at least 2 replicates");
    }
    group_means.push_back(mean_of(values));
    persistent += sample_variance(values);
  }
  VarianceDecomposition out;
  out.nonstationary = sample_variance(group_means);
  out.persistent = persistent / static_cast<double>(groups.size());
  out.total = out.nonstationary + out.persistent;
  out.pooled = sample_variance(study.estimates);
  return out;
}

TwoStateAnalytics two_state_analytics(double q) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("two_state_analytics: q must lie in (0, 1]");
  TwoStateAnalytics out;
  out.ess_per_draw = q == 1.0 ? std::numeric_limits<double>::infinity() : q / (1.0 - q);
  out.tv_decay_factor = std::abs(1.0 - 2.0 * q);
  return out;
}

std::vector<double> simulate_two_state(double q, std::size_t steps, RngStream rng) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("simulate_two_state: q must lie in (0, 1]");
  std::vector<double> out(steps);
  int state = rng.uniform() < 0.5 ? 0 : 1;
  for (std::size_t n = 0; n < steps; ++n) {
    if (rng.uniform() < q) state = 1 - state;
    out[n] = state;
  }
  return out;
}

double measured_two_state_ess_per_draw(double q, std::size_t steps, std::uint64_t seed) {
  auto draws = simulate_two_state(q, steps, RngStream(mix64(seed)));
  const DrawMatrix m(1, steps, std::move(draws));
  return ess(m) / static_cast<double>(steps);
}

std::vector<OuDecayRow> ou_decay_study(const OUProcessSpec& spec, std::span<const double> times,
                                       const OuDecayOptions& options) {
  validate(spec);
  if (times.empty()) throw InvalidArgument("ou_decay_study: empty time grid");
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0) {
    throw InvalidArgument("ou_decay_study: times must be sorted and non-negative");
  }
  if (options.groups < 2 || options.replicates_per_group < 2) {
    throw InvalidArgument("ou_decay_study: need at least 2 groups of 2 replicates");
  }
  const std::size_t k_count = options.groups;
  const std::size_t n_count = options.replicates_per_group;
  const std::size_t t_count = times.size();
  // values[t][k * n_count + j]
  std::vector<std::vector<double>> values(t_count, std::vector<double>(k_count * n_count));
  parallel_for(k_count, options.threads, [&](std::size_t k) {
    RngStream start = derive_stream(options.seed, k, StreamPurpose::initialization, 0);
    const double theta0 = spec.mu0 + spec.sigma0 * start.normal();
    for (std::size_t j = 0; j < n_count; ++j) {
      RngStream rng = derive_stream(options.seed, k, StreamPurpose::replicate, j);
      double theta = theta0;
      double now = 0.0;
      for (std::size_t i = 0; i < t_count; ++i) {
        if (times[i] > now) {
          theta = ou_exact_step(spec, theta, times[i] - now, rng);
          now = times[i];
        }
        values[i][k * n_count + j] = theta;
      }
    }
  });

  std::vector<std::size_t> group(k_count * n_count);
  for (std::size_t r = 0; r < group.size(); ++r) group[r] = r / n_count;
  std::vector<OuDecayRow> rows;
  for (std::size_t i = 0; i < t_count; ++i) {
    OuDecayRow row;
    row.t = times[i];
    row.bias = (spec.mu0 - spec.mu) * std::exp(-times[i]);
    row.squared_bias = row.bias * row.bias;
    const auto vd = variance_decomposition({values[i], group});
    row.nonstationary_var = vd.nonstationary;
    row.persistent_var = vd.persistent;
    row.tv = ou_tv_to_stationary(spec, times[i]);
    row.empirical_bias = mean_of(values[i]) - spec.mu;
    rows.push_back(row);
  }
  return rows;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_slope: need >= 2 points");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace chainlab

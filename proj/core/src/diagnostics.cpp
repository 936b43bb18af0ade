#include "chainlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "chainlab/errors.hpp"

namespace chainlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Sample variance, denominator n - 1.
double variance_of(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace

ChainMeans chain_means(const DrawMatrix& samples) {
  if (samples.chains() == 0 || samples.iterations() == 0) {
    throw InvalidArgument("chain_means: empty input");
  }
  ChainMeans out;
  out.per_chain.resize(samples.chains());
  for (std::size_t m = 0; m < samples.chains(); ++m) out.per_chain[m] = mean_of(samples.chain(m));
  out.pooled = mean_of(out.per_chain);
  return out;
}

RhatComponents rhat_components(const DrawMatrix& samples) {
  const std::size_t m_count = samples.chains();
  const std::size_t n = samples.iterations();
  if (m_count < 2 || n < 2) {
    throw InvalidArgument("rhat_components: need at least 2 chains of at least 2 draws");
  }
  const auto means = chain_means(samples);
  RhatComponents r;
  r.between = variance_of(means.per_chain);
  double w = 0.0;
  for (std::size_t m = 0; m < m_count; ++m) w += variance_of(samples.chain(m));
  r.within = w / static_cast<double>(m_count);
  if (r.within == 0.0) {
    r.constant_chains = true;
    r.rhat = kNaN;
    return r;
  }
  const double nd = static_cast<double>(n);
  r.rhat = std::sqrt((nd - 1.0) / nd + r.between / r.within);
  return r;
}

DrawMatrix split_chains(const DrawMatrix& samples) {
  const std::size_t n = samples.iterations();
  const std::size_t half = n / 2;
  DrawMatrix out(2 * samples.chains(), half);
  for (std::size_t m = 0; m < samples.chains(); ++m) {
    const auto c = samples.chain(m);
    std::copy_n(c.begin(), half, out.chain(2 * m).begin());
    std::copy_n(c.begin() + static_cast<std::ptrdiff_t>(n - half), half, out.chain(2 * m + 1).begin());
  }
  return out;
}

RhatComponents split_rhat_components(const DrawMatrix& samples) {
  if (samples.iterations() < 4) throw InvalidArgument("split_rhat: need at least 4 draws per chain");
  if (samples.chains() < 1) throw InvalidArgument("split_rhat: no chains");
  return rhat_components(split_chains(samples));
}

double split_rhat(const DrawMatrix& samples) { return split_rhat_components(samples).rhat; }

double between_tolerance(double within, std::size_t iterations, double eps) {
  const double n = static_cast<double>(iterations);
  return ((1.0 + eps) * (1.0 + eps) - (n - 1.0) / n) * within;
}

double nested_rhat(const DrawMatrix& samples, std::span<const std::size_t> group_of_chain) {
  if (group_of_chain.size() != samples.chains()) {
    throw InvalidArgument("nested_rhat: one group id per chain required");
  }
  if (samples.iterations() == 0) throw InvalidArgument("nested_rhat: empty chains");
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t m = 0; m < group_of_chain.size(); ++m) members[group_of_chain[m]].push_back(m);
  if (members.size() < 2) throw InvalidArgument("nested_rhat: need at least 2 groups");
  for (const auto& [k, chains] : members) {
    if (chains.size() < 2) throw InvalidArgument("nested_rhat: every group needs at least 2 chains");
  }
  const std::size_t n = samples.iterations();
  Vector superchain_means;
  double within_sum = 0.0;
  for (const auto& [k, chains] : members) {
    Vector means;
    double chain_var = 0.0;
    for (std::size_t m : chains) {
      means.push_back(mean_of(samples.chain(m)));
      if (n > 1) chain_var += variance_of(samples.chain(m));
    }
    superchain_means.push_back(mean_of(means));
    within_sum += variance_of(means) + chain_var / static_cast<double>(chains.size());
  }
  const double nb = variance_of(superchain_means);
  const double nw = within_sum / static_cast<double>(members.size());
  if (nw == 0.0) return kNaN;
  return std::sqrt(1.0 + nb / nw);
}

Vector autocovariance(std::span<const double> chain, std::size_t max_lag) {
  const std::size_t n = chain.size();
  if (n < 2) throw InvalidArgument("autocovariance: need at least 2 draws");
  if (max_lag >= n) throw InvalidArgument("autocovariance: max_lag must be below the chain length");
  const double m = mean_of(chain);
  Vector centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = chain[i] - m;
  Vector out(max_lag + 1, 0.0);
  for (std::size_t t = 0; t <= max_lag; ++t) {
    double s = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) s += centered[i] * centered[i + t];
    out[t] = s / static_cast<double>(n);
  }
  return out;
}

double ess(const DrawMatrix& samples) {
  const std::size_t m_count = samples.chains();
  const std::size_t n = samples.iterations();
  if (m_count == 0 || n == 0) throw InvalidArgument("ess: empty input");
  const auto& all = samples.values();
  const bool constant = std::all_of(all.begin(), all.end(), [&](double v) { return v == all.front(); });
  if (constant) return kNaN;
  if (n == 1) return static_cast<double>(m_count);
  if (n < 4) return kNaN;

  const double nd = static_cast<double>(n);
  std::vector<Vector> centered(m_count);
  Vector means(m_count);
  double within = 0.0;
  for (std::size_t m = 0; m < m_count; ++m) {
    const auto c = samples.chain(m);
    means[m] = mean_of(c);
    centered[m].resize(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      centered[m][i] = c[i] - means[m];
      ss += centered[m][i] * centered[m][i];
    }
    within += ss / (nd - 1.0);
  }
  within /= static_cast<double>(m_count);
  const double between = m_count > 1 ? variance_of(means) : 0.0;
  const double var_plus = (nd - 1.0) / nd * within + between;
  if (!(within > 0.0) || !(var_plus > 0.0)) return kNaN;

  auto rho = [&](std::size_t t) {
    if (t == 0) return 1.0;
    double acov = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
      const auto& x = centered[m];
      double s = 0.0;
      for (std::size_t i = 0; i + t < n; ++i) s += x[i] * x[i + t];
      acov += s / nd;
    }
    acov /= static_cast<double>(m_count);
    return 1.0 - (within - acov) / var_plus;
  };

  double pair_sum_total = 0.0;
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    const double pair = rho(t) + rho(t + 1);
    if (pair < 0.0) break;
    pair_sum_total += pair;
  }
  const double tau = -1.0 + 2.0 * pair_sum_total;
  const double total = static_cast<double>(m_count) * nd;
  double out = tau > 0.0 ? total / tau : std::numeric_limits<double>::infinity();
  out = std::min(out, total * std::log10(total));
  return std::max(out, 1.0);
}

double mcse(double sd, double ess_value) {
  if (!(ess_value > 0.0)) throw InvalidArgument("mcse: ess must be positive");
  if (sd < 0.0) throw InvalidArgument("mcse: sd must be non-negative");
  return sd / std::sqrt(ess_value);
}

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile: level must lie in [0, 1]");
  const double rank = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

QuantityOfInterest coordinate_quantity(std::size_t index) {
  return {"theta[" + std::to_string(index) + "]",
          [index](std::span<const double> theta) { return theta[index]; }};
}

std::vector<QuantityOfInterest> coordinate_quantities(std::size_t dimension) {
  std::vector<QuantityOfInterest> out;
  for (std::size_t i = 0; i < dimension; ++i) out.push_back(coordinate_quantity(i));
  return out;
}

bool QuantitySummary::has_flag(std::string_view f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

double DiagnosticsReport::min_ess() const {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& q : quantities) {
    if (std::isnan(q.ess)) return kNaN;
    out = std::min(out, q.ess);
  }
  return out;
}

double DiagnosticsReport::max_rhat() const {
  double out = -std::numeric_limits<double>::infinity();
  for (const auto& q : quantities) {
    if (std::isnan(q.rhat)) return kNaN;
    out = std::max(out, q.rhat);
  }
  return out;
}

bool DiagnosticsReport::flag_free() const {
  return std::all_of(quantities.begin(), quantities.end(),
                     [](const QuantitySummary& q) { return q.flags.empty(); });
}

QuantitySummary summarize_quantity(std::string name, const DrawMatrix& values,
                                   std::span<const std::size_t> group_of_chain,
                                   double rhat_threshold) {
  QuantitySummary s;
  s.name = std::move(name);
  auto add = [&s](std::string_view f) {
    if (!s.has_flag(f)) s.flags.emplace_back(f);
  };
  const auto& all = values.values();
  if (all.empty()) throw InvalidArgument("summarize: sampling phase is empty");

  if (!std::all_of(all.begin(), all.end(), [](double v) { return std::isfinite(v); })) {
    add(flag::non_finite);
    s.mean = s.sd = s.q05 = s.q50 = s.q95 = s.bhat = s.what = s.rhat = s.split_rhat = s.ess =
        s.mcse = kNaN;
    add(flag::rhat_undefined);
    add(flag::ess_undefined);
    return s;
  }

  const auto means = chain_means(values);
  s.mean = means.pooled;
  s.per_chain_means = means.per_chain;
  s.sd = all.size() > 1 ? std::sqrt(variance_of(all)) : kNaN;

  std::vector<double> sorted(all);
  std::sort(sorted.begin(), sorted.end());
  s.q05 = quantile(sorted, 0.05);
  s.q50 = quantile(sorted, 0.50);
  s.q95 = quantile(sorted, 0.95);
  if (sorted.front() == sorted.back()) add(flag::constant_chain);

  if (values.chains() >= 2 && values.iterations() >= 2) {
    const auto r = rhat_components(values);
    s.bhat = r.between;
    s.what = r.within;
    s.rhat = r.rhat;
    if (r.constant_chains) add(flag::constant_chain);
  } else {
    s.bhat = values.chains() >= 2 ? variance_of(means.per_chain) : kNaN;
    s.what = kNaN;
    s.rhat = kNaN;
  }
  if (std::isnan(s.rhat)) {
    add(flag::rhat_undefined);
  } else if (s.rhat > 1.0 + rhat_threshold) {
    add(flag::rhat_high);
  }

  s.split_rhat = values.iterations() >= 4 ? split_rhat(values) : kNaN;
  if (std::isnan(s.split_rhat)) add(flag::split_rhat_undefined);

  std::map<std::size_t, std::size_t> group_sizes;
  for (auto g : group_of_chain) ++group_sizes[g];
  if (group_sizes.size() >= 2) {
    try {
      s.nested_rhat = nested_rhat(values, group_of_chain);
    } catch (const InvalidArgument&) {
      s.nested_rhat = kNaN;
    }
    if (std::isnan(*s.nested_rhat)) add(flag::nested_rhat_undefined);
  }

  s.ess = ess(values);
  if (std::isnan(s.ess)) {
    add(flag::ess_undefined);
    s.mcse = kNaN;
  } else {
    if (s.ess < kLowEssThreshold) add(flag::low_ess);
    s.mcse = std::isnan(s.sd) ? kNaN : mcse(s.sd, s.ess);
  }
  return s;
}

DiagnosticsReport summarize(const ChainMatrix& matrix, std::span<const QuantityOfInterest> quantities,
                            double rhat_threshold) {
  if (matrix.sampling_iterations() == 0 || matrix.chains() == 0) {
    throw InvalidArgument("summarize: sampling phase is empty");
  }
  DiagnosticsReport report;
  report.chains = matrix.chains();
  report.iterations = matrix.sampling_iterations();
  report.groups = matrix.groups();
  report.rhat_threshold = rhat_threshold;
  for (const auto& q : quantities) {
    report.quantities.push_back(summarize_quantity(q.name, matrix.sampling_values(q.extractor),
                                                   matrix.group_of_chain(), rhat_threshold));
  }
  return report;
}

}  // namespace chainlab

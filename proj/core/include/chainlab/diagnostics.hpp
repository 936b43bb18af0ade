#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chainlab/chain_matrix.hpp"

namespace chainlab {

struct ChainMeans {
  Vector per_chain;
  double pooled = 0.0;
};

// Per-chain means and their average. Throws on empty input.
ChainMeans chain_means(const DrawMatrix& samples);

struct RhatComponents {
  double between = 0.0;  // B: sample variance of chain means
  double within = 0.0;   // W: mean per-chain sample variance
  double rhat = 0.0;     // sqrt((N-1)/N + B/W); NaN when W == 0
  bool constant_chains = false;
};

// Needs M >= 2 and N >= 2.
RhatComponents rhat_components(const DrawMatrix& samples);

// Halves every chain (dropping the middle draw when N is odd).
DrawMatrix split_chains(const DrawMatrix& samples);

// R-hat over the 2M half chains. Needs N >= 4.
RhatComponents split_rhat_components(const DrawMatrix& samples);
double split_rhat(const DrawMatrix& samples);

// R-hat <= 1 + eps is the same condition as B <= ((1 + eps)^2 - (N-1)/N) W.
double between_tolerance(double within, std::size_t iterations, double eps);

// Superchain R-hat over groups of chains that share an initial point.
// nB = sample variance of superchain means; nW = mean over groups of
// (sample variance of chain means + mean within-chain variance); returns
// sqrt(1 + nB / nW). With a single draw per chain the within-chain term is 0.
// Needs at least two groups of at least two chains; NaN when nW == 0.
double nested_rhat(const DrawMatrix& samples, std::span<const std::size_t> group_of_chain);

// Biased (1/N) autocovariances at lags 0..max_lag.
Vector autocovariance(std::span<const double> chain, std::size_t max_lag);

// Multi-chain effective sample size. Lag-t correlations combine the average
// within-chain autocovariance with the between/within variance structure,
//
//   rho_t = 1 - (W - mean_m acov_m(t)) / var_plus,  var_plus = (N-1)/N W + B,
//
// and the sum is truncated at the first negative pair (rho_2k + rho_2k+1)
// (Geyer's initial positive sequence, no monotone step). ESS = MN / tau with
// tau = 1 + 2 sum rho_t, clamped to [1, MN log10(MN)].
//
// With N == 1 the chains are taken as independent and ESS = M. NaN for
// constant input or for 2 <= N < 4.
double ess(const DrawMatrix& samples);

// sd / sqrt(ess); throws when ess <= 0.
double mcse(double sd, double ess);

// Linear interpolation at rank (n-1) q of sorted input.
double quantile(std::span<const double> sorted, double q);

struct QuantityOfInterest {
  std::string name;
  std::function<double(std::span<const double>)> extractor;
};

QuantityOfInterest coordinate_quantity(std::size_t index);
std::vector<QuantityOfInterest> coordinate_quantities(std::size_t dimension);

namespace flag {
inline constexpr std::string_view constant_chain = "constant-chain";
inline constexpr std::string_view low_ess = "low-ess";
inline constexpr std::string_view ess_undefined = "ess-undefined";
inline constexpr std::string_view rhat_undefined = "rhat-undefined";
inline constexpr std::string_view rhat_high = "rhat-high";
inline constexpr std::string_view split_rhat_undefined = "split-rhat-undefined";
inline constexpr std::string_view nested_rhat_undefined = "nested-rhat-undefined";
inline constexpr std::string_view non_finite = "non-finite";
}  // namespace flag

inline constexpr double kDefaultRhatThreshold = 0.01;
inline constexpr double kLowEssThreshold = 100.0;

struct QuantitySummary {
  std::string name;
  double mean = 0.0;
  Vector per_chain_means;
  double sd = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double bhat = 0.0;
  double what = 0.0;
  double rhat = 0.0;
  double split_rhat = 0.0;
  std::optional<double> nested_rhat;
  double ess = 0.0;
  double mcse = 0.0;
  std::vector<std::string> flags;

  bool has_flag(std::string_view f) const;
};

struct DiagnosticsReport {
  std::vector<QuantitySummary> quantities;
  std::size_t chains = 0;
  std::size_t iterations = 0;  // sampling draws per chain
  std::size_t groups = 1;
  double rhat_threshold = kDefaultRhatThreshold;

  // NaN propagates: an undefined ESS or R-hat makes these NaN.
  double min_ess() const;
  double max_rhat() const;
  bool flag_free() const;
};

// Every statistic above, per quantity, on sampling draws only. A degenerate
// quantity gets flags, never an exception. Nested R-hat is reported only
// when the chains form two or more groups.
DiagnosticsReport summarize(const ChainMatrix& matrix, std::span<const QuantityOfInterest> quantities,
                            double rhat_threshold = kDefaultRhatThreshold);

// Same, from precomputed scalar draws (one matrix per named quantity).
QuantitySummary summarize_quantity(std::string name, const DrawMatrix& values,
                                   std::span<const std::size_t> group_of_chain,
                                   double rhat_threshold = kDefaultRhatThreshold);

}  // namespace chainlab

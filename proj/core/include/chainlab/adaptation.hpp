#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chainlab/samplers.hpp"

namespace chainlab {

// Dual-averaging constants for step-size adaptation. gamma is larger than
// the usual 0.05: that value is paired with trajectory-averaged acceptance
// statistics, while these kernels feed one noisy Metropolis ratio per
// iteration. At 0.05 the iterates swing so widely that the averaged step
// misses the target acceptance by 0.1-0.2.
inline constexpr double kDualAvgGamma = 0.15;
inline constexpr double kDualAvgT0 = 10.0;
inline constexpr double kDualAvgKappa = 0.75;
inline constexpr double kPreconditionerFloor = 1e-10;
inline constexpr std::size_t kTerminalWindow = 50;
inline constexpr std::size_t kFirstWindow = 25;

struct WarmupWindow {
  std::size_t begin = 0;  // first warmup iteration in the window
  std::size_t end = 0;    // one past the last
  bool update_metric = false;

  std::size_t length() const { return end - begin; }
};

// Metric windows of 25, 25, 50, 100, ... iterations followed by a final
// 50-iteration step-size-only window. The last metric window absorbs any
// remainder that cannot hold the next doubling. Short warmups (< 150) get a
// single step-size-only window.
std::vector<WarmupWindow> warmup_schedule(std::size_t warmup);

void dual_averaging_observe(TuningState& tuning, double accept_prob, double target);
void dual_averaging_restart(TuningState& tuning);

// Sets the step size to the dual-averaged iterate and marks the state frozen.
void freeze(TuningState& tuning);

// Draws one chain produced inside an adaptation window, row-major n x d.
struct ChainWindow {
  std::size_t dimension = 0;
  std::vector<double> draws;
  double mean_accept_prob = 0.0;

  std::size_t size() const { return dimension == 0 ? 0 : draws.size() / dimension; }
  void push(std::span<const double> point) { draws.insert(draws.end(), point.begin(), point.end()); }
};

// Per-dimension sample variance (denominator n - 1) of the concatenated windows.
Vector pooled_variance(std::span<const ChainWindow> windows);

struct AdaptationReport {
  bool floored = false;                  // some window had zero variance in a dimension
  std::vector<std::size_t> floored_dims;
};

// Window-boundary update. Every chain's step size moves to its dual-averaged
// iterate; with update_metric the preconditioner becomes the window's sample
// variance. In cross_chain mode the window is pooled across chains, the step
// size is the geometric mean of the chains' iterates, and every chain leaves
// with an identical TuningState. Throws ContractViolation on frozen input.
std::vector<TuningState> adapt_update(std::span<const TuningState> tunings,
                                      std::span<const ChainWindow> windows, AdaptationMode mode,
                                      bool update_metric, AdaptationReport* report = nullptr);

}  // namespace chainlab

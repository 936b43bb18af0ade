#include "chainlab/adaptation.hpp"

#include <cmath>

#include "chainlab/errors.hpp"

namespace chainlab {

std::vector<WarmupWindow> warmup_schedule(std::size_t warmup) {
  std::vector<WarmupWindow> out;
  if (warmup == 0) return out;
  if (warmup < kTerminalWindow + 4 * kFirstWindow) {
    out.push_back({0, warmup, false});
    return out;
  }
  const std::size_t metric_end = warmup - kTerminalWindow;
  std::size_t pos = 0;
  std::size_t len = kFirstWindow;
  std::size_t index = 0;
  while (pos < metric_end) {
    const std::size_t next = index == 0 ? kFirstWindow : 2 * len;
    std::size_t this_len = len;
    if (pos + this_len + next > metric_end) this_len = metric_end - pos;
    out.push_back({pos, pos + this_len, true});
    pos += this_len;
    len = next;
    ++index;
  }
  out.push_back({metric_end, warmup, false});
  return out;
}

void dual_averaging_observe(TuningState& tuning, double accept_prob, double target) {
  if (tuning.frozen) throw ContractViolation("dual averaging on a frozen tuning state");
  auto& da = tuning.dual_avg;
  ++da.iteration;
  const double t = static_cast<double>(da.iteration);
  const double eta = 1.0 / (t + kDualAvgT0);
  da.gradient_average = (1.0 - eta) * da.gradient_average + eta * (target - accept_prob);
  const double log_step = da.shrinkage_target - std::sqrt(t) / kDualAvgGamma * da.gradient_average;
  const double w = std::pow(t, -kDualAvgKappa);
  da.log_step_average = w * log_step + (1.0 - w) * da.log_step_average;
  tuning.step_size = std::exp(log_step);
}

void dual_averaging_restart(TuningState& tuning) {
  auto& da = tuning.dual_avg;
  da.shrinkage_target = std::log(10.0 * tuning.step_size);
  da.log_step_average = std::log(tuning.step_size);
  da.gradient_average = 0.0;
  da.iteration = 0;
}

void freeze(TuningState& tuning) {
  if (tuning.dual_avg.iteration > 0) tuning.step_size = std::exp(tuning.dual_avg.log_step_average);
  tuning.frozen = true;
}

Vector pooled_variance(std::span<const ChainWindow> windows) {
  if (windows.empty()) throw InvalidArgument("pooled_variance: no windows");
  const std::size_t d = windows.front().dimension;
  Vector mean(d, 0.0), m2(d, 0.0);
  std::size_t n = 0;
  for (const auto& w : windows) {
    if (w.dimension != d) throw InvalidArgument("pooled_variance: dimension mismatch");
    for (std::size_t r = 0; r < w.size(); ++r) {
      ++n;
      for (std::size_t i = 0; i < d; ++i) {
        const double x = w.draws[r * d + i];
        const double delta = x - mean[i];
        mean[i] += delta / static_cast<double>(n);
        m2[i] += delta * (x - mean[i]);
      }
    }
  }
  if (n < 2) throw InvalidArgument("pooled_variance: need at least two draws");
  for (double& v : m2) v /= static_cast<double>(n - 1);
  return m2;
}

namespace {

Vector floored(Vector variance, AdaptationReport* report) {
  for (std::size_t i = 0; i < variance.size(); ++i) {
    if (!(variance[i] > kPreconditionerFloor) || !std::isfinite(variance[i])) {
      variance[i] = kPreconditionerFloor;
      if (report) {
        report->floored = true;
        report->floored_dims.push_back(i);
      }
    }
  }
  return variance;
}

double averaged_step(const TuningState& t) {
  return t.dual_avg.iteration > 0 ? std::exp(t.dual_avg.log_step_average) : t.step_size;
}

}  // namespace

std::vector<TuningState> adapt_update(std::span<const TuningState> tunings,
                                      std::span<const ChainWindow> windows, AdaptationMode mode,
                                      bool update_metric, AdaptationReport* report) {
  if (tunings.empty()) throw InvalidArgument("adapt_update: no chains");
  if (update_metric && windows.size() != tunings.size()) {
    throw InvalidArgument("adapt_update: one window per chain required");
  }
  for (const auto& t : tunings) {
    if (t.frozen) throw ContractViolation("adapt_update called after tuning was frozen");
  }
  std::vector<TuningState> out(tunings.begin(), tunings.end());

  if (mode == AdaptationMode::per_chain) {
    for (std::size_t m = 0; m < out.size(); ++m) {
      out[m].step_size = averaged_step(out[m]);
      if (update_metric) {
        out[m].diag_preconditioner = floored(pooled_variance(windows.subspan(m, 1)), report);
      }
      dual_averaging_restart(out[m]);
    }
    return out;
  }

  double log_step = 0.0;
  for (const auto& t : out) log_step += std::log(averaged_step(t));
  TuningState shared = out.front();
  shared.step_size = std::exp(log_step / static_cast<double>(out.size()));
  if (update_metric) shared.diag_preconditioner = floored(pooled_variance(windows), report);
  dual_averaging_restart(shared);
  for (auto& t : out) t = shared;
  return out;
}

}  // namespace chainlab

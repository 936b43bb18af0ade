#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chainlab {

using Vector = std::vector<double>;

struct Evaluation {
  double log_density = 0.0;
  Vector gradient;
};

// A target density p(theta) on R^d, known up to an additive constant in log
// space. The density callback fills `gradient` when it is non-empty.
//
// Every gradient request increments an atomic counter; that count is the
// cost unit used throughout the engine and the experiments. Copies start
// from the source's current count but count independently afterwards.
class TargetModel {
 public:
  using DensityFn =
      std::function<double(std::span<const double> theta, std::span<double> gradient)>;

  TargetModel(std::string name, std::size_t dimension, DensityFn density,
              std::optional<Vector> analytic_mean = std::nullopt,
              std::optional<Vector> analytic_marginal_sd = std::nullopt);

  TargetModel(const TargetModel& other);
  TargetModel& operator=(const TargetModel& other);
  TargetModel(TargetModel&& other) noexcept;
  TargetModel& operator=(TargetModel&& other) noexcept;
  ~TargetModel() = default;

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return dimension_; }
  const std::optional<Vector>& analytic_mean() const { return analytic_mean_; }
  const std::optional<Vector>& analytic_marginal_sd() const { return analytic_marginal_sd_; }

  // Log density only; does not touch the gradient counter.
  double log_density(std::span<const double> theta) const;

  // Log density and gradient; counts one gradient evaluation.
  double log_density_gradient(std::span<const double> theta, std::span<double> gradient) const;

  Evaluation evaluate(std::span<const double> theta) const;

  std::uint64_t gradient_evaluations() const {
    return gradient_evaluations_.load(std::memory_order_relaxed);
  }
  void reset_gradient_evaluations() { gradient_evaluations_.store(0, std::memory_order_relaxed); }

 private:
  void check_dimension(std::size_t size) const;

  std::string name_;
  std::size_t dimension_ = 0;
  DensityFn density_;
  std::optional<Vector> analytic_mean_;
  std::optional<Vector> analytic_marginal_sd_;
  mutable std::atomic<std::uint64_t> gradient_evaluations_{0};
};

// Diagonal-covariance Gaussian, normalizing constant included.
TargetModel make_gaussian(Vector mean, Vector marginal_variances);

// Zero-mean diagonal Gaussian whose variances are log-spaced from 1 to
// condition_number, both ends included.
TargetModel make_ill_conditioned(std::size_t dimension, double condition_number);

// log p(x, y) = -x^2 / (2 scale^2) - (y - curvature x^2)^2 / 2
TargetModel make_banana(double curvature = 1.0, double scale = 2.0);

}  // namespace chainlab

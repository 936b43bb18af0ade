#include "chainlab/model.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "chainlab/errors.hpp"

namespace chainlab {

TargetModel::TargetModel(std::string name, std::size_t dimension, DensityFn density,
                         std::optional<Vector> analytic_mean,
                         std::optional<Vector> analytic_marginal_sd)
    : name_(std::move(name)),
      dimension_(dimension),
      density_(std::move(density)),
      analytic_mean_(std::move(analytic_mean)),
      analytic_marginal_sd_(std::move(analytic_marginal_sd)) {
  if (dimension_ == 0) {
    throw InvalidArgument("target dimension must be positive");
  }
  if (!density_) {
    throw InvalidArgument("target density callback is empty");
  }
  if (analytic_mean_ && analytic_mean_->size() != dimension_) {
    throw InvalidArgument("analytic mean has wrong dimension");
  }
  if (analytic_marginal_sd_ && analytic_marginal_sd_->size() != dimension_) {
    throw InvalidArgument("analytic marginal sd has wrong dimension");
  }
}

TargetModel::TargetModel(const TargetModel& other)
    : name_(other.name_),
      dimension_(other.dimension_),
      density_(other.density_),
      analytic_mean_(other.analytic_mean_),
      analytic_marginal_sd_(other.analytic_marginal_sd_),
      gradient_evaluations_(other.gradient_evaluations()) {}

TargetModel& TargetModel::operator=(const TargetModel& other) {
  if (this != &other) {
    name_ = other.name_;
    dimension_ = other.dimension_;
    density_ = other.density_;
    analytic_mean_ = other.analytic_mean_;
    analytic_marginal_sd_ = other.analytic_marginal_sd_;
    gradient_evaluations_.store(other.gradient_evaluations(), std::memory_order_relaxed);
  }
  return *this;
}

TargetModel::TargetModel(TargetModel&& other) noexcept
    : name_(std::move(other.name_)),
      dimension_(other.dimension_),
      density_(std::move(other.density_)),
      analytic_mean_(std::move(other.analytic_mean_)),
      analytic_marginal_sd_(std::move(other.analytic_marginal_sd_)),
      gradient_evaluations_(other.gradient_evaluations()) {}

TargetModel& TargetModel::operator=(TargetModel&& other) noexcept {
  name_ = std::move(other.name_);
  dimension_ = other.dimension_;
  density_ = std::move(other.density_);
  analytic_mean_ = std::move(other.analytic_mean_);
  analytic_marginal_sd_ = std::move(other.analytic_marginal_sd_);
  gradient_evaluations_.store(other.gradient_evaluations(), std::memory_order_relaxed);
  return *this;
}

void TargetModel::check_dimension(std::size_t size) const {
  if (size != dimension_) {
    throw InvalidArgument("expected a point of dimension " + std::to_string(dimension_) +
                          ", got " + std::to_string(size));
  }
}

double TargetModel::log_density(std::span<const double> theta) const {
  check_dimension(theta.size());
  return density_(theta, {});
}

double TargetModel::log_density_gradient(std::span<const double> theta,
                                         std::span<double> gradient) const {
  check_dimension(theta.size());
  check_dimension(gradient.size());
  gradient_evaluations_.fetch_add(1, std::memory_order_relaxed);
  return density_(theta, gradient);
}

Evaluation TargetModel::evaluate(std::span<const double> theta) const {
  Evaluation out;
  out.gradient.assign(dimension_, 0.0);
  out.log_density = log_density_gradient(theta, out.gradient);
  return out;
}

namespace {

struct GaussianParts {
  TargetModel::DensityFn density;
  Vector sd;
};

GaussianParts gaussian_parts(const Vector& mean, const Vector& marginal_variances,
                             const char* family) {
  if (mean.empty() || mean.size() != marginal_variances.size()) {
    throw InvalidArgument(std::string(family) +
                          ": mean and variances must be non-empty and equal length");
  }
  double log_norm = 0.0;
  Vector precision(mean.size());
  Vector sd(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double v = marginal_variances[i];
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string(family) + ": variance " + std::to_string(i) +
                            " must be positive");
    }
    precision[i] = 1.0 / v;
    sd[i] = std::sqrt(v);
    log_norm -= 0.5 * std::log(2.0 * std::numbers::pi * v);
  }
  auto density = [mean, precision, log_norm](std::span<const double> theta,
                                             std::span<double> gradient) {
    double lp = log_norm;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double z = theta[i] - mean[i];
      lp -= 0.5 * z * z * precision[i];
      if (!gradient.empty()) gradient[i] = -z * precision[i];
    }
    return lp;
  };
  return {std::move(density), std::move(sd)};
}

}  // namespace

TargetModel make_gaussian(Vector mean, Vector marginal_variances) {
  auto parts = gaussian_parts(mean, marginal_variances, "gaussian");
  const std::size_t d = mean.size();
  return TargetModel("gaussian", d, std::move(parts.density), std::move(mean),
                     std::move(parts.sd));
}

TargetModel make_ill_conditioned(std::size_t dimension, double condition_number) {
  if (dimension < 2) {
    throw InvalidArgument("illcond: dimension must be at least 2");
  }
  if (!(condition_number >= 1.0) || !std::isfinite(condition_number)) {
    throw InvalidArgument("illcond: condition number must be >= 1");
  }
  Vector variances(dimension);
  const double log_kappa = std::log(condition_number);
  for (std::size_t i = 0; i < dimension; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(dimension - 1);
    variances[i] = std::exp(frac * log_kappa);
  }
  // Pin the endpoints so last/first is exactly the condition number.
  variances.front() = 1.0;
  variances.back() = condition_number;
  Vector mean(dimension, 0.0);
  auto parts = gaussian_parts(mean, variances, "illcond");
  return TargetModel("illcond", dimension, std::move(parts.density), std::move(mean),
                     std::move(parts.sd));
}

TargetModel make_banana(double curvature, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(curvature)) {
    throw InvalidArgument("banana: scale must be positive and parameters finite");
  }
  const double inv_s2 = 1.0 / (scale * scale);
  auto density = [curvature, inv_s2](std::span<const double> theta, std::span<double> gradient) {
    const double x = theta[0];
    const double r = theta[1] - curvature * x * x;
    if (!gradient.empty()) {
      gradient[0] = -x * inv_s2 + 2.0 * curvature * x * r;
      gradient[1] = -r;
    }
    return -0.5 * x * x * inv_s2 - 0.5 * r * r;
  };
  // x ~ N(0, s^2), y | x ~ N(c x^2, 1): E y = c s^2, Var y = 1 + 2 c^2 s^4.
  const double s2 = scale * scale;
  Vector mean{0.0, curvature * s2};
  Vector sd{scale, std::sqrt(1.0 + 2.0 * curvature * curvature * s2 * s2)};
  return TargetModel("banana", 2, std::move(density), std::move(mean), std::move(sd));
}

}  // namespace chainlab

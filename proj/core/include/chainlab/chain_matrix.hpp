#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chainlab/model.hpp"

namespace chainlab {

enum class Phase { warmup, sampling };

// M x N scalar draws, chain-major.
class DrawMatrix {
 public:
  DrawMatrix() = default;
  DrawMatrix(std::size_t chains, std::size_t iterations);
  DrawMatrix(std::size_t chains, std::size_t iterations, std::vector<double> values);
  static DrawMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t chains() const { return chains_; }
  std::size_t iterations() const { return iterations_; }
  std::span<const double> chain(std::size_t m) const {
    return {values_.data() + m * iterations_, iterations_};
  }
  std::span<double> chain(std::size_t m) { return {values_.data() + m * iterations_, iterations_}; }
  double operator()(std::size_t m, std::size_t n) const { return values_[m * iterations_ + n]; }
  double& operator()(std::size_t m, std::size_t n) { return values_[m * iterations_ + n]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t chains_ = 0;
  std::size_t iterations_ = 0;
  std::vector<double> values_;
};

struct ChainMetadata {
  std::uint64_t seed = 0;  // key of the chain's root stream
  std::uint64_t divergences = 0;
  double acceptance_rate = 0.0;  // sampling phase
  std::uint64_t gradient_evaluations = 0;
};

// Draws indexed (chain, iteration, dimension). Warmup iterations come first.
// Group ids are 0-based; with more than one group, chains of a group started
// from the same point.
class ChainMatrix {
 public:
  ChainMatrix() = default;
  ChainMatrix(std::size_t chains, std::size_t warmup, std::size_t sampling, std::size_t dimension,
              std::vector<std::size_t> group_of_chain);

  std::size_t chains() const { return chains_; }
  std::size_t iterations() const { return warmup_ + sampling_; }
  std::size_t warmup_iterations() const { return warmup_; }
  std::size_t sampling_iterations() const { return sampling_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t groups() const;
  Phase phase(std::size_t iteration) const {
    return iteration < warmup_ ? Phase::warmup : Phase::sampling;
  }

  std::span<const double> draw(std::size_t chain, std::size_t iteration) const {
    return {draws_.data() + index(chain, iteration), dimension_};
  }
  std::span<double> draw(std::size_t chain, std::size_t iteration) {
    return {draws_.data() + index(chain, iteration), dimension_};
  }

  const std::vector<std::size_t>& group_of_chain() const { return group_of_chain_; }
  std::vector<ChainMetadata>& metadata() { return metadata_; }
  const std::vector<ChainMetadata>& metadata() const { return metadata_; }
  const std::vector<double>& raw() const { return draws_; }

  // Sampling-phase values of a scalar function of the draws.
  DrawMatrix sampling_values(const std::function<double(std::span<const double>)>& f) const;

 private:
  std::size_t index(std::size_t chain, std::size_t iteration) const {
    return (chain * (warmup_ + sampling_) + iteration) * dimension_;
  }

  std::size_t chains_ = 0;
  std::size_t warmup_ = 0;
  std::size_t sampling_ = 0;
  std::size_t dimension_ = 0;
  std::vector<double> draws_;
  std::vector<std::size_t> group_of_chain_;
  std::vector<ChainMetadata> metadata_;
};

}  // namespace chainlab

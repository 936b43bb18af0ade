#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "chainlab/chain_matrix.hpp"
#include "chainlab/rng.hpp"

namespace chainlab::testing {

// M stationary AR(1) chains x_n = rho x_{n-1} + sqrt(1 - rho^2) e_n.
inline DrawMatrix ar1_chains(std::size_t chains, std::size_t iterations, double rho,
                             std::uint64_t seed) {
  DrawMatrix out(chains, iterations);
  const double innovation = std::sqrt(1.0 - rho * rho);
  for (std::size_t m = 0; m < chains; ++m) {
    RngStream rng = derive_stream(seed, m, StreamPurpose::replicate, 0);
    double x = rng.normal();
    for (std::size_t n = 0; n < iterations; ++n) {
      out(m, n) = x;
      x = rho * x + innovation * rng.normal();
    }
  }
  return out;
}

inline DrawMatrix white_noise(std::size_t chains, std::size_t iterations, std::uint64_t seed) {
  return ar1_chains(chains, iterations, 0.0, seed);
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("chainlab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace chainlab::testing

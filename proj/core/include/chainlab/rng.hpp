#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace chainlab {

// Counter-based stream: the n-th variate is a pure function of (key, n), so
// streams can be re-derived anywhere without carrying generator state across
// threads. The mixing function is the SplitMix64 finalizer.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() = default;
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform();
  double normal();

  // Independent child stream; does not advance this one.
  RngStream split(std::uint64_t tag) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const RngStream& a, const RngStream& b) {
    return a.key_ == b.key_ && a.counter_ == b.counter_;
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix64(std::uint64_t z);
std::uint64_t hash_combine64(std::uint64_t seed, std::uint64_t value);

// Which part of a run consumes a stream. Keeping these apart means that a
// cross-chain barrier can never shift which variates a chain sees.
enum class StreamPurpose : std::uint64_t {
  initialization = 1,
  step_size_search = 2,
  warmup = 3,
  sampling = 4,
  probe = 5,
  replicate = 6,
};

RngStream derive_chain_rng(std::uint64_t root_seed, std::uint64_t chain_index);
RngStream derive_stream(std::uint64_t root_seed, std::uint64_t chain_index,
                        StreamPurpose purpose, std::uint64_t iteration);

// Seed for the r-th replicate of an experiment built on root_seed.
std::uint64_t derive_replicate_seed(std::uint64_t root_seed, std::uint64_t replicate);

}  // namespace chainlab

#include "chainlab/rng.hpp"

namespace chainlab {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_combine64(std::uint64_t seed, std::uint64_t value) {
  return mix64(seed ^ (mix64(value + kGolden) + kGolden + (seed << 6) + (seed >> 2)));
}

RngStream::result_type RngStream::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  const std::uint64_t bits = (*this)() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(*this); }

RngStream RngStream::split(std::uint64_t tag) const {
  return RngStream(hash_combine64(key_, tag));
}

RngStream derive_chain_rng(std::uint64_t root_seed, std::uint64_t chain_index) {
  return RngStream(hash_combine64(mix64(root_seed), chain_index));
}

RngStream derive_stream(std::uint64_t root_seed, std::uint64_t chain_index,
                        StreamPurpose purpose, std::uint64_t iteration) {
  std::uint64_t key = derive_chain_rng(root_seed, chain_index).key();
  key = hash_combine64(key, static_cast<std::uint64_t>(purpose));
  key = hash_combine64(key, iteration);
  return RngStream(key);
}

std::uint64_t derive_replicate_seed(std::uint64_t root_seed, std::uint64_t replicate) {
  return hash_combine64(mix64(root_seed ^ 0x5851f42d4c957f2dULL), replicate);
}

}  // namespace chainlab

#include <benchmark/benchmark.h>

#include "chainlab/diagnostics.hpp"
#include "chainlab/rng.hpp"

namespace {

chainlab::DrawMatrix noise(std::size_t chains, std::size_t iterations) {
  chainlab::DrawMatrix out(chains, iterations);
  chainlab::RngStream rng(1);
  for (std::size_t m = 0; m < chains; ++m) {
    for (double& v : out.chain(m)) v = rng.normal();
  }
  return out;
}

void bm_ess(benchmark::State& state) {
  const auto draws = noise(static_cast<std::size_t>(state.range(0)),
                           static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(chainlab::ess(draws));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(bm_ess)->Args({4, 1000})->Args({64, 100})->Args({1024, 10});

void bm_split_rhat(benchmark::State& state) {
  const auto draws = noise(static_cast<std::size_t>(state.range(0)), 1000);
  for (auto _ : state) benchmark::DoNotOptimize(chainlab::split_rhat(draws));
}
BENCHMARK(bm_split_rhat)->Arg(4)->Arg(64);

}  // namespace

#include <benchmark/benchmark.h>

#include "chainlab/engine.hpp"
#include "chainlab/target_spec.hpp"

namespace {

void bm_run(benchmark::State& state) {
  const auto model = chainlab::parse_target_spec("illcond:d=10,kappa=100");
  const auto quantities = chainlab::coordinate_quantities(model.dimension());
  chainlab::RunConfig config;
  config.chains = static_cast<std::size_t>(state.range(0));
  config.warmup = 200;
  config.sampling = 200;
  for (auto _ : state) {
    auto result = chainlab::run(config, model, quantities, {1});
    benchmark::DoNotOptimize(result.draws.raw().data());
  }
}
BENCHMARK(bm_run)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

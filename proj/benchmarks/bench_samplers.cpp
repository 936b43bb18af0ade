#include <benchmark/benchmark.h>

#include "chainlab/samplers.hpp"
#include "chainlab/target_spec.hpp"

namespace {

void bm_transition(benchmark::State& state, chainlab::SamplerKind kind) {
  const auto model = chainlab::parse_target_spec("illcond:d=" + std::to_string(state.range(0)) +
                                                 ",kappa=100");
  const auto tuning = chainlab::make_tuning(model.dimension(), 0.05, 10);
  auto chain = chainlab::make_chain_state(model, chainlab::Vector(model.dimension(), 0.1),
                                          chainlab::RngStream(3));
  for (auto _ : state) {
    chain = chainlab::transition(kind, model, std::move(chain), tuning);
    benchmark::DoNotOptimize(chain.position.data());
  }
}
BENCHMARK_CAPTURE(bm_transition, rwm, chainlab::SamplerKind::rwm)->Arg(10)->Arg(100);
BENCHMARK_CAPTURE(bm_transition, mala, chainlab::SamplerKind::mala)->Arg(10)->Arg(100);
BENCHMARK_CAPTURE(bm_transition, hmc, chainlab::SamplerKind::hmc)->Arg(10)->Arg(100);

}  // namespace

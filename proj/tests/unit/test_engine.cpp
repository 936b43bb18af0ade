#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "chainlab/engine.hpp"
#include "chainlab/errors.hpp"

using namespace chainlab;

namespace {

const std::vector<QuantityOfInterest>& first_coordinate() {
  static const std::vector<QuantityOfInterest> q{coordinate_quantity(0)};
  return q;
}

RunConfig small_config(std::uint64_t seed) {
  RunConfig c;
  c.warmup = 300;
  c.sampling = 200;
  c.root_seed = seed;
  return c;
}

double sampling_acceptance(const RunResult& r) {
  double sum = 0.0;
  for (const auto& m : r.draws.metadata()) sum += m.acceptance_rate;
  return sum / static_cast<double>(r.draws.chains());
}

}  // namespace

TEST_CASE("config validation") {
  RunConfig c;
  CHECK_NOTHROW(validate(c));
  c.chains = 0;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = RunConfig{};
  c.groups = 3;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = RunConfig{};
  c.sampling = 0;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = RunConfig{};
  c.target_ess = -1.0;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = RunConfig{};
  c.init.kind = InitKind::fixed_points;
  c.init.points = {{0.0}, {1.0}};
  CHECK_THROWS_AS(validate(c), InvalidArgument);
}

TEST_CASE("defaults follow the usual workflow") {
  const RunConfig c;
  CHECK(c.chains == 4);
  CHECK(c.warmup == 1000);
  CHECK(c.sampling == 1000);
  CHECK(c.groups == 1);
  CHECK(c.rhat_threshold == 0.01);
}

TEST_CASE("ungrouped chains get their own starts") {
  const auto model = make_gaussian({0.0, 0.0}, {1.0, 1.0});
  RunConfig c;
  c.chains = 6;
  const auto inits = initialize(c, model);
  for (std::size_t a = 0; a < inits.size(); ++a) {
    CHECK(inits[a].group == 0);
    for (std::size_t b = a + 1; b < inits.size(); ++b) CHECK(inits[a].theta0 != inits[b].theta0);
  }
}

TEST_CASE("every chain its own group when K = M") {
  const auto model = make_gaussian({0.0}, {1.0});
  RunConfig c;
  c.chains = 4;
  c.groups = 4;
  const auto inits = initialize(c, model);
  for (std::size_t m = 0; m < 4; ++m) CHECK(inits[m].group == m);
  CHECK(inits[0].theta0 != inits[1].theta0);
}

TEST_CASE("grouped chains share their start bit for bit") {
  const auto model = make_gaussian({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
  RunConfig c;
  c.chains = 8;
  c.groups = 2;
  const auto inits = initialize(c, model);
  for (std::size_t m = 0; m < 8; ++m) {
    CHECK(inits[m].group == m / 4);
    CHECK(inits[m].theta0 == inits[(m / 4) * 4].theta0);
  }
  CHECK(inits[0].theta0 != inits[4].theta0);
  CHECK(inits[0].rng.key() != inits[1].rng.key());
}

TEST_CASE("fixed points start every group at its point") {
  const auto model = make_gaussian({0.0}, {1.0});
  RunConfig c;
  c.chains = 4;
  c.groups = 2;
  c.init.kind = InitKind::fixed_points;
  c.init.points = {{-3.0}, {3.0}};
  const auto inits = initialize(c, model);
  CHECK(inits[1].theta0 == Vector{-3.0});
  CHECK(inits[3].theta0 == Vector{3.0});
  c.init.points = {{-3.0}};
  CHECK_THROWS_AS(initialize(c, model), InvalidArgument);
}

TEST_CASE("overdispersed starts have the requested scale") {
  const auto model = make_gaussian({0.0}, {1.0});
  RunConfig c;
  c.chains = 10000;
  c.init.scale = 3.0;
  const auto inits = initialize(c, model);
  double sum = 0.0, sum2 = 0.0;
  for (const auto& i : inits) {
    sum += i.theta0[0];
    sum2 += i.theta0[0] * i.theta0[0];
  }
  const double n = 10000.0;
  const double sd = std::sqrt((sum2 - sum * sum / n) / (n - 1));
  CHECK(std::abs(sd / 3.0 - 1.0) < 0.05);

  // Default scale: four times the largest marginal sd.
  const auto wide = make_gaussian({0.0, 0.0}, {1.0, 25.0});
  c.init.scale = 0.0;
  const auto d = initialize(c, wide);
  double s2 = 0.0;
  for (const auto& i : d) s2 += i.theta0[0] * i.theta0[0];
  CHECK(std::abs(std::sqrt(s2 / n) / 20.0 - 1.0) < 0.05);
}

TEST_CASE("run produces the configured shape and a sound estimate") {
  const auto model = make_gaussian({0.0}, {1.0});
  RunConfig c;
  c.root_seed = 1;
  const auto r = run(c, model, first_coordinate());
  CHECK(r.draws.chains() == 4);
  CHECK(r.draws.warmup_iterations() == 1000);
  CHECK(r.draws.sampling_iterations() == 1000);
  CHECK(r.draws.raw().size() == 4 * 2000);
  CHECK(r.stopping_reason == StoppingReason::fixed_budget);
  const auto& q = r.report.quantities[0];
  CHECK(std::abs(q.mean) < 4.0 * q.mcse);
  CHECK(r.report.iterations == 1000);
}

TEST_CASE("output does not depend on the worker count") {
  const auto model = make_banana();
  for (auto mode : {AdaptationMode::per_chain, AdaptationMode::cross_chain}) {
    RunConfig c = small_config(2);
    c.chains = 6;
    c.adaptation = mode;
    const auto one = run(c, model, coordinate_quantities(2), ExecutionOptions{1});
    const auto many = run(c, model, coordinate_quantities(2), ExecutionOptions{8});
    CHECK(one.draws.raw() == many.draws.raw());
    CHECK(one.gradient_evaluations == many.gradient_evaluations);
    for (std::size_t m = 0; m < 6; ++m) CHECK(serialize(one.tunings[m]) == serialize(many.tunings[m]));
  }
}

TEST_CASE("gradient accounting matches the model counter") {
  const auto model = make_ill_conditioned(5, 100.0);
  for (auto kind : {SamplerKind::rwm, SamplerKind::mala, SamplerKind::hmc}) {
    RunConfig c = small_config(3);
    c.sampler = kind;
    c.adaptation = AdaptationMode::cross_chain;
    const auto r = run(c, model, first_coordinate(), ExecutionOptions{3});
    const auto total = std::accumulate(r.gradient_evaluations.begin(), r.gradient_evaluations.end(),
                                       std::uint64_t{0});
    CHECK(total == r.model_gradient_evaluations);
    for (std::size_t m = 0; m < c.chains; ++m) {
      CHECK(r.draws.metadata()[m].gradient_evaluations == r.gradient_evaluations[m]);
      const auto& trace = r.warmup_gradient_trace[m];
      REQUIRE(trace.size() == c.warmup);
      for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1]);
      CHECK(trace.back() <= r.gradient_evaluations[m]);
    }
  }
}

TEST_CASE("tuning is frozen for the whole sampling phase") {
  const auto model = make_gaussian({0.0, 1.0}, {1.0, 4.0});
  for (auto mode : {AdaptationMode::per_chain, AdaptationMode::cross_chain}) {
    RunConfig c = small_config(4);
    c.adaptation = mode;
    const auto r = run(c, model, first_coordinate());
    REQUIRE(r.tuning_at_freeze.size() == c.chains);
    for (std::size_t m = 0; m < c.chains; ++m) {
      CHECK(r.tunings[m].frozen);
      CHECK(r.tuning_at_freeze[m] == serialize(r.tunings[m]));
    }
    if (mode == AdaptationMode::cross_chain) {
      for (std::size_t m = 1; m < c.chains; ++m) CHECK(serialize(r.tunings[m]) == serialize(r.tunings[0]));
    }
  }
}

TEST_CASE("warmup windows are recorded") {
  const auto model = make_gaussian({0.0}, {1.0});
  RunConfig c = small_config(5);
  c.warmup = 1000;
  const auto r = run(c, model, first_coordinate());
  const auto schedule = warmup_schedule(1000);
  REQUIRE(r.warmup_windows.size() == schedule.size());
  for (std::size_t w = 0; w < schedule.size(); ++w) {
    CHECK(r.warmup_windows[w].begin == schedule[w].begin);
    CHECK(r.warmup_windows[w].end == schedule[w].end);
    CHECK(r.warmup_windows[w].gradient_evaluations.size() == c.chains);
  }
}

TEST_CASE("stationary starts without warmup rarely alarm R-hat") {
  const auto model = make_gaussian({0.0}, {1.0});
  int below = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    RunConfig c;
    c.warmup = 0;
    c.sampling = 1000;
    c.init.kind = InitKind::standard_normal;
    c.root_seed = derive_replicate_seed(77, r);
    below += run(c, model, first_coordinate()).report.quantities[0].rhat < 1.01;
  }
  CHECK(below >= 95);
}

TEST_CASE("sampling acceptance lands near each kernel's target") {
  const auto model = make_gaussian(Vector(10, 0.0), Vector(10, 1.0));
  for (auto mode : {AdaptationMode::per_chain, AdaptationMode::cross_chain}) {
    for (auto kind : {SamplerKind::rwm, SamplerKind::mala, SamplerKind::hmc}) {
      CAPTURE(to_string(kind));
      CAPTURE(to_string(mode));
      RunConfig c;
      c.sampler = kind;
      c.adaptation = mode;
      c.root_seed = 6;
      const auto r = run(c, model, first_coordinate());
      CHECK(std::abs(sampling_acceptance(r) - target_acceptance(kind)) <= 0.1);
    }
  }
}

TEST_CASE("a non-finite initial point aborts with the point") {
  const TargetModel model("wall", 1, [](std::span<const double> x, std::span<double> g) {
    if (!g.empty()) g[0] = -x[0];
    return x[0] > 5.0 ? std::numeric_limits<double>::quiet_NaN() : -0.5 * x[0] * x[0];
  });
  RunConfig c = small_config(7);
  c.chains = 2;
  c.groups = 2;
  c.init.kind = InitKind::fixed_points;
  c.init.points = {{0.0}, {6.5}};
  try {
    run(c, model, first_coordinate());
    FAIL("expected a runtime failure");
  } catch (const RuntimeFailure& e) {
    CHECK(std::string(e.what()).find("6.5") != std::string::npos);
  }
}

TEST_CASE("many short chains") {
  const auto model = make_gaussian({0.0}, {1.0});
  RunConfig c;
  c.chains = 1000;
  c.warmup = 200;
  c.sampling = 1;
  c.root_seed = 8;
  const auto r = run_many_short(c, model, first_coordinate());
  const auto& q = r.report.quantities[0];
  CHECK(q.ess == 1000.0);
  CHECK(q.has_flag(flag::split_rhat_undefined));
  CHECK(std::abs(q.mean) < 4.0 / std::sqrt(1000.0));
  CHECK(r.draws.raw().size() == 1000 * 201);
}

TEST_CASE("adaptive stopping after one increment") {
  const auto model = make_gaussian({0.0}, {1.0});
  RunConfig c;
  c.root_seed = 9;
  c.target_ess = 100.0;
  const auto r = run_adaptive(c, model, first_coordinate());
  CHECK(r.stopping_reason == StoppingReason::target_met);
  CHECK(r.draws.sampling_iterations() == kAdaptiveFirstIncrement);
  CHECK(r.report.min_ess() >= 100.0);
  CHECK(r.report.max_rhat() <= 1.01);
}

TEST_CASE("adaptive stopping exhausts a tiny budget") {
  const auto model = make_gaussian({0.0}, {1.0});
  RunConfig c;
  c.root_seed = 10;
  c.warmup = 200;
  c.target_ess = 1e6;
  c.max_total_iterations = 1000;
  const auto r = run_adaptive(c, model, first_coordinate());
  CHECK(r.stopping_reason == StoppingReason::budget_exhausted);
  CHECK(r.draws.iterations() <= 1000);
  CHECK(r.report.quantities[0].has_flag(flag::low_ess));
}

TEST_CASE("adaptive stopping is within a small factor of an oracle run") {
  const auto model = make_gaussian({0.0}, {1.0});
  RunConfig c;
  c.root_seed = 11;
  c.target_ess = 400.0;
  const auto adaptive = run_adaptive(c, model, first_coordinate());
  CHECK(adaptive.report.min_ess() >= 400.0);

  // Oracle: sampling length sized by the efficiency measured on a long run.
  RunConfig long_run = c;
  long_run.target_ess.reset();
  long_run.sampling = 20000;
  const auto reference = run(long_run, model, first_coordinate());
  const double ess_per_iteration = reference.report.quantities[0].ess / 20000.0;
  const double oracle_iterations = 400.0 / ess_per_iteration;
  CHECK(static_cast<double>(adaptive.draws.sampling_iterations()) <= 8.0 * oracle_iterations);
}

TEST_CASE("init and stopping tokens") {
  CHECK(parse_init_kind("overdispersed") == InitKind::overdispersed);
  CHECK(parse_init_kind("fixed_points") == InitKind::fixed_points);
  CHECK(parse_init_kind("standard_normal") == InitKind::standard_normal);
  CHECK_THROWS_AS(parse_init_kind("prior"), InvalidArgument);
  CHECK(to_string(StoppingReason::budget_exhausted) == "budget-exhausted");
}

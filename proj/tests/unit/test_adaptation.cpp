#include <doctest.h>

#include <cmath>
#include <vector>

#include "chainlab/adaptation.hpp"
#include "chainlab/errors.hpp"

using namespace chainlab;

namespace {

ChainWindow window(std::vector<double> draws, std::size_t d = 1) {
  ChainWindow w;
  w.dimension = d;
  w.draws = std::move(draws);
  return w;
}

}  // namespace

TEST_CASE("warmup schedule for the default warmup") {
  const auto s = warmup_schedule(1000);
  REQUIRE(s.size() >= 5);
  CHECK(s[0].length() == 25);
  CHECK(s[1].length() == 25);
  CHECK(s[2].length() == 50);
  CHECK(s[3].length() == 100);
  CHECK(s.front().begin == 0);
  CHECK(s.back().end == 1000);
  CHECK(s.back().length() == kTerminalWindow);
  CHECK_FALSE(s.back().update_metric);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    CHECK(s[i].end == s[i + 1].begin);
    CHECK(s[i].update_metric);
  }
  // The last metric window absorbs what cannot hold another doubling.
  for (std::size_t i = 1; i + 2 < s.size(); ++i) CHECK(s[i + 1].length() >= s[i].length());
}

TEST_CASE("warmup schedule edge cases") {
  CHECK(warmup_schedule(0).empty());
  const auto shortw = warmup_schedule(100);
  REQUIRE(shortw.size() == 1);
  CHECK(shortw[0].length() == 100);
  CHECK_FALSE(shortw[0].update_metric);
  for (std::size_t w : {150u, 151u, 200u, 333u, 5000u}) {
    const auto s = warmup_schedule(w);
    CHECK(s.front().begin == 0);
    CHECK(s.back().end == w);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) CHECK(s[i].end == s[i + 1].begin);
  }
}

TEST_CASE("dual averaging moves the step toward the target") {
  auto high = make_tuning(1, 0.5);
  auto low = make_tuning(1, 0.5);
  dual_averaging_restart(high);
  dual_averaging_restart(low);
  dual_averaging_observe(high, 1.0, 0.8);
  dual_averaging_observe(low, 0.0, 0.8);
  CHECK(high.step_size > 0.5);
  CHECK(low.step_size < high.step_size);
  for (int i = 0; i < 50; ++i) dual_averaging_observe(low, 0.0, 0.8);
  CHECK(low.step_size < 0.5);
}

TEST_CASE("freeze takes the averaged iterate") {
  auto t = make_tuning(1, 0.5);
  dual_averaging_restart(t);
  for (int i = 0; i < 20; ++i) dual_averaging_observe(t, i % 2 ? 0.9 : 0.6, 0.8);
  const double averaged = std::exp(t.dual_avg.log_step_average);
  freeze(t);
  CHECK(t.frozen);
  CHECK(t.step_size == averaged);
}

TEST_CASE("frozen tuning cannot adapt") {
  auto t = make_tuning(1, 0.5);
  freeze(t);
  CHECK_THROWS_AS(dual_averaging_observe(t, 0.5, 0.8), ContractViolation);
  const std::vector<TuningState> tunings{t};
  const std::vector<ChainWindow> windows{window({0.0, 1.0})};
  CHECK_THROWS_AS(adapt_update(tunings, windows, AdaptationMode::per_chain, true), ContractViolation);
}

TEST_CASE("pooled variance by hand") {
  const std::vector<ChainWindow> windows{window({0.0, 2.0}), window({0.0, -2.0})};
  CHECK(pooled_variance(windows)[0] == doctest::Approx(8.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(pooled_variance(std::vector<ChainWindow>{}), InvalidArgument);
  CHECK_THROWS_AS(pooled_variance(std::vector<ChainWindow>{window({1.0})}), InvalidArgument);
}

TEST_CASE("pooling is concatenation") {
  RngStream rng(1);
  std::vector<ChainWindow> split;
  ChainWindow joined = window({}, 3);
  for (int m = 0; m < 4; ++m) {
    ChainWindow w = window({}, 3);
    for (int n = 0; n < 30; ++n) {
      const Vector p{rng.normal(), 3.0 * rng.normal(), 0.1 * rng.normal()};
      w.push(p);
      joined.push(p);
    }
    split.push_back(w);
  }
  CHECK(pooled_variance(split) == pooled_variance(std::vector<ChainWindow>{joined}));

  std::vector<TuningState> tunings(4, make_tuning(3, 0.3));
  const auto pooled = adapt_update(tunings, split, AdaptationMode::cross_chain, true);
  const auto single = adapt_update(std::vector<TuningState>{make_tuning(3, 0.3)},
                                   std::vector<ChainWindow>{joined}, AdaptationMode::cross_chain, true);
  for (const auto& t : pooled) CHECK(t.diag_preconditioner == single[0].diag_preconditioner);
}

TEST_CASE("cross-chain update leaves identical tuning states") {
  std::vector<TuningState> tunings{make_tuning(1, 0.1), make_tuning(1, 0.4)};
  for (auto& t : tunings) dual_averaging_restart(t);
  const std::vector<ChainWindow> windows{window({0.0, 1.0, 2.0}), window({5.0, 6.0, 4.0})};
  const auto out = adapt_update(tunings, windows, AdaptationMode::cross_chain, true);
  CHECK(serialize(out[0]) == serialize(out[1]));
  CHECK(out[0].step_size == doctest::Approx(0.2));  // geometric mean of 0.1 and 0.4
}

TEST_CASE("per-chain update uses each chain's own window") {
  const std::vector<TuningState> tunings(2, make_tuning(1, 0.3));
  const std::vector<ChainWindow> windows{window({0.0, 2.0}), window({0.0, 4.0})};
  const auto out = adapt_update(tunings, windows, AdaptationMode::per_chain, true);
  CHECK(out[0].diag_preconditioner[0] == doctest::Approx(2.0));
  CHECK(out[1].diag_preconditioner[0] == doctest::Approx(8.0));
  CHECK_THROWS_AS(adapt_update(tunings, std::vector<ChainWindow>{windows[0]},
                               AdaptationMode::per_chain, true),
                  InvalidArgument);
}

TEST_CASE("step-size-only windows keep the metric") {
  auto t = make_tuning(1, 0.3);
  t.diag_preconditioner = {7.0};
  const auto out = adapt_update(std::vector<TuningState>{t}, {}, AdaptationMode::per_chain, false);
  CHECK(out[0].diag_preconditioner[0] == 7.0);
}

TEST_CASE("zero-variance windows are floored and flagged") {
  const std::vector<TuningState> tunings(1, make_tuning(2, 0.3));
  const std::vector<ChainWindow> windows{window({1.0, 0.0, 1.0, 2.0, 1.0, 4.0}, 2)};
  AdaptationReport report;
  const auto out = adapt_update(tunings, windows, AdaptationMode::per_chain, true, &report);
  CHECK(out[0].diag_preconditioner[0] == kPreconditionerFloor);
  CHECK(out[0].diag_preconditioner[1] == doctest::Approx(4.0));
  CHECK(report.floored);
  CHECK(report.floored_dims == std::vector<std::size_t>{0});
}

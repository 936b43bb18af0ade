#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <json.hpp>

#include "chainlab/errors.hpp"
#include "chainlab/experiments.hpp"
#include "chainlab/io.hpp"
#include "test_support.hpp"

using namespace chainlab;

namespace {

std::size_t line_count(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

ExperimentSpec small_run(const std::filesystem::path& dir) {
  ExperimentSpec spec;
  spec.target = "gaussian:d=2";
  spec.base.chains = 4;
  spec.base.warmup = 1000;
  spec.base.sampling = 1000;
  spec.base.root_seed = 3;
  spec.output_dir = dir;
  return spec;
}

}  // namespace

TEST_CASE("tokens") {
  CHECK(to_string(ExperimentKind::sweep_chains) == "sweep-chains");
  CHECK(parse_draw_format("bin") == DrawFormat::bin);
  CHECK(parse_draw_format(to_string(DrawFormat::csv)) == DrawFormat::csv);
  CHECK_THROWS_AS(parse_draw_format("json"), InvalidArgument);
}

TEST_CASE("spec validation") {
  ExperimentSpec spec;
  spec.replications = 0;
  CHECK_THROWS_AS(validate(spec), InvalidArgument);
  spec = {};
  spec.sweep_chain_counts = {4, 2};
  CHECK_THROWS_AS(validate(spec), InvalidArgument);
  spec = {};
  spec.bias_threshold = 0.0;
  CHECK_THROWS_AS(validate(spec), InvalidArgument);
  spec = {};
  spec.oracle.t_grid = {-1.0};
  CHECK_THROWS_AS(validate(spec), InvalidArgument);
}

TEST_CASE("replicate seeds") {
  ExperimentSpec spec;
  spec.replications = 5;
  const auto derived = replicate_seeds(spec);
  CHECK(derived.size() == 5);
  CHECK(std::set<std::uint64_t>(derived.begin(), derived.end()).size() == 5);
  spec.seeds = {8, 9};
  CHECK(replicate_seeds(spec) == std::vector<std::uint64_t>{8, 9});
}

TEST_CASE("run writes its files and is reproducible") {
  const auto dir = testing::scratch_dir("exp_run");
  auto spec = small_run(dir / "a");
  const auto outcome = cmd_run(spec);
  for (const char* name : {"draws.csv", "summary.csv", "summary.json", "run_meta.json"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(dir / "a" / name));
  }
  CHECK(line_count(dir / "a" / "summary.csv") == 1 + 2);
  CHECK(line_count(dir / "a" / "draws.csv") == 1 + 4 * 2000);
  const auto back = read_draws_csv(dir / "a" / "draws.csv");
  CHECK(back.raw() == outcome.result.draws.raw());

  spec.output_dir = dir / "b";
  spec.threads = 1;
  cmd_run(spec);
  for (const char* name : {"draws.csv", "summary.csv", "summary.json"}) {
    CAPTURE(name);
    CHECK(read_text_file(dir / "a" / name) == read_text_file(dir / "b" / name));
  }
  // Only the wall-clock timings may differ.
  auto meta_a = nlohmann::json::parse(read_text_file(dir / "a" / "run_meta.json"));
  auto meta_b = nlohmann::json::parse(read_text_file(dir / "b" / "run_meta.json"));
  CHECK(meta_a.contains("timings"));
  meta_a.erase("timings");
  meta_b.erase("timings");
  CHECK(meta_a == meta_b);
}

TEST_CASE("binary run output") {
  const auto dir = testing::scratch_dir("exp_run_bin");
  auto spec = small_run(dir);
  spec.base.warmup = 100;
  spec.base.sampling = 100;
  spec.format = DrawFormat::bin;
  const auto outcome = cmd_run(spec);
  CHECK(read_draws_binary(dir / "draws.bin").raw() == outcome.result.draws.raw());

  ExperimentSpec summarize;
  summarize.draws_path = dir / "draws.bin";
  summarize.output_dir = dir / "again";
  const auto report = cmd_summarize(summarize);
  CHECK(report.quantities.size() == 2);
  CHECK(read_text_file(dir / "again" / "summary.csv") == read_text_file(dir / "summary.csv"));
}

TEST_CASE("summarize reproduces the run summary") {
  const auto dir = testing::scratch_dir("exp_summarize");
  auto spec = small_run(dir);
  spec.base.warmup = 200;
  spec.base.sampling = 300;
  cmd_run(spec);
  ExperimentSpec summarize;
  summarize.draws_path = dir / "draws.csv";
  summarize.output_dir = dir / "s";
  cmd_summarize(summarize);
  CHECK(read_text_file(dir / "s" / "summary.csv") == read_text_file(dir / "summary.csv"));
  CHECK(read_text_file(dir / "s" / "summary.json") == read_text_file(dir / "summary.json"));

  summarize.draws_path.clear();
  CHECK_THROWS_AS(cmd_summarize(summarize), InvalidArgument);
  summarize.draws_path = dir / "missing.csv";
  CHECK_THROWS_AS(cmd_summarize(summarize), RuntimeFailure);
}

TEST_CASE("replicate study") {
  const auto dir = testing::scratch_dir("exp_replicate");
  auto spec = small_run(dir / "one");
  spec.base.warmup = 200;
  spec.base.sampling = 200;
  spec.replications = 1;
  const auto single = cmd_replicate(spec);
  CHECK(single.size() == 1);
  CHECK(line_count(dir / "one" / "replicate.csv") == 2);
  CHECK_FALSE(std::filesystem::exists(dir / "one" / "replicate_summary.json"));

  spec.output_dir = dir / "many";
  spec.seeds = {1, 2, 3};
  const auto rows = cmd_replicate(spec);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].seed == 2);
  const auto doc = nlohmann::json::parse(read_text_file(dir / "many" / "replicate_summary.json"));
  CHECK(doc.contains("share_rhat_above"));

  const auto agg = aggregate(rows, spec.base.rhat_threshold);
  CHECK(agg.replications == 3);
  CHECK(agg.mean_of_means ==
        doctest::Approx((rows[0].mean + rows[1].mean + rows[2].mean) / 3.0));
}

TEST_CASE("aggregate counts NaN as above threshold") {
  std::vector<ReplicateRow> rows(4);
  rows[0].rhat = 1.0;
  rows[1].rhat = 1.02;
  rows[2].rhat = std::nan("");
  rows[3].rhat = 1.005;
  for (auto& r : rows) r.split_rhat = 1.0;
  const auto agg = aggregate(rows, 0.01);
  CHECK(agg.share_rhat_above == doctest::Approx(0.5));
  CHECK(agg.share_split_rhat_above == 0.0);
}

TEST_CASE("sweep") {
  const auto dir = testing::scratch_dir("exp_sweep");
  ExperimentSpec spec;
  spec.target = "gaussian:d=2";
  spec.base.warmup = 100;
  spec.base.sampling = 1;
  spec.base.adaptation = AdaptationMode::cross_chain;
  spec.sweep_chain_counts = {4};
  spec.sweep_replicates = 2;
  spec.bias_threshold = 0.5;
  spec.output_dir = dir;
  const auto rows = cmd_sweep_chains(spec);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].chains == 4);
  CHECK(rows[0].iterations % kSweepCheckpoint == 0);
  if (rows[0].achieved) {
    CHECK(rows[0].achieved_bias < 0.5);
    CHECK(rows[0].grad_evals_per_chain <= rows[0].grad_evals_at_checkpoint);
  }
  CHECK(line_count(dir / "sweep.csv") == 2);
  CHECK(sweep_csv(rows).rfind(
            "chains,grad_evals_per_chain,achieved_bias,achieved,iterations,grad_evals_at_checkpoint\n",
            0) == 0);

  spec.base.warmup = 0;
  CHECK_THROWS_AS(sweep_chains(spec), InvalidArgument);
}

TEST_CASE("oracle study") {
  const auto dir = testing::scratch_dir("exp_oracle");
  ExperimentSpec spec;
  spec.oracle.t_grid = {0.0, 0.5, 1.0};
  spec.oracle.two_state_q = {0.5};
  spec.oracle.two_state_steps = 10000;
  spec.oracle.groups = 10;
  spec.oracle.replicates_per_group = 20;
  spec.output_dir = dir;
  const auto out = cmd_oracle(spec);
  REQUIRE(out.decay.size() == 3);
  for (const auto& r : out.decay) CHECK(std::abs(r.bias - 2.0 * std::exp(-r.t)) < 1e-12);
  CHECK(out.decay[0].tv == tv_normal(2.0, 1.0, 0.0, 1.0));
  REQUIRE(out.two_state.size() == 1);
  CHECK(out.two_state[0].ess_per_draw_analytic == doctest::Approx(1.0));
  CHECK(line_count(dir / "ou_decay.csv") == 4);
  CHECK(line_count(dir / "two_state.csv") == 2);
}

TEST_CASE("unwritable output directory") {
  const auto dir = testing::scratch_dir("exp_unwritable");
  write_text_file(dir / "file", "x");
  auto spec = small_run(dir / "file" / "out");
  spec.base.warmup = 10;
  spec.base.sampling = 10;
  CHECK_THROWS_AS(cmd_run(spec), RuntimeFailure);
}

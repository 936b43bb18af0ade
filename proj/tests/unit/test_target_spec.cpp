#include <doctest.h>

#include <cmath>
#include <string>

#include "chainlab/target_spec.hpp"

using namespace chainlab;

namespace {

std::size_t error_position(const std::string& text) {
  try {
    parse_target_spec(text);
  } catch (const TargetSpecError& e) {
    return e.position();
  }
  FAIL("expected a parse error for '" << text << "'");
  return 0;
}

}  // namespace

TEST_CASE("gaussian defaults to the standard normal") {
  const auto model = parse_target_spec("gaussian");
  CHECK(model.dimension() == 1);
  CHECK(model.analytic_mean()->at(0) == 0.0);
  CHECK(model.analytic_marginal_sd()->at(0) == 1.0);
  CHECK(parse_target_spec("gaussian:d=1").dimension() == 1);
}

TEST_CASE("gaussian scalars broadcast and lists set the dimension") {
  const auto a = parse_target_spec("gaussian:d=3,mean=2,var=4");
  CHECK(a.dimension() == 3);
  for (double m : *a.analytic_mean()) CHECK(m == 2.0);
  for (double s : *a.analytic_marginal_sd()) CHECK(s == 2.0);

  const auto b = parse_target_spec("gaussian:var=1;4;9");
  CHECK(b.dimension() == 3);
  CHECK(b.analytic_marginal_sd()->at(2) == 3.0);

  const auto c = parse_target_spec("gaussian:mean=1;-1,var=0.25");
  CHECK(c.dimension() == 2);
  CHECK(c.analytic_mean()->at(1) == -1.0);
  CHECK(c.analytic_marginal_sd()->at(1) == 0.5);
}

TEST_CASE("illcond and banana") {
  const auto ill = parse_target_spec("illcond:d=51,kappa=1000");
  CHECK(ill.dimension() == 51);
  CHECK(ill.analytic_marginal_sd()->back() == doctest::Approx(std::sqrt(1000.0)));

  const auto banana = parse_target_spec("banana");
  CHECK(banana.dimension() == 2);
  const auto custom = parse_target_spec("banana:curv=0.5,scale=1");
  const auto g = custom.evaluate(Vector{1.0, 0.5}).gradient;
  CHECK(g[0] == doctest::Approx(-1.0));
  CHECK(g[1] == doctest::Approx(0.0));
}

TEST_CASE("parse errors carry the offending position") {
  CHECK(error_position("") == 0);
  CHECK(error_position("cauchy:d=1") == 0);
  CHECK(error_position("gaussian:") == 9);
  CHECK(error_position("gaussian:d") == 10);
  CHECK(error_position("gaussian:d=") == 11);
  CHECK(error_position("gaussian:d=x") == 11);
  CHECK(error_position("gaussian:d=1,foo=2") == 13);
  CHECK(error_position("gaussian:d=1,d=2") == 13);
  CHECK(error_position("gaussian:d=2,var=1;2;3") == 17);
  CHECK(error_position("gaussian:var=-1") == 13);
  CHECK(error_position("illcond:d=1,kappa=10") == 10);
  CHECK(error_position("illcond:d=5,kappa=0.5") == 18);
  CHECK(error_position("illcond:d=2.5,kappa=10") == 10);
  CHECK(error_position("banana:scale=0") == 13);
  CHECK(error_position("gaussian:d=1 ") == 12);
}

TEST_CASE("parse errors are invalid arguments") {
  CHECK_THROWS_AS(parse_target_spec("nope"), InvalidArgument);
}

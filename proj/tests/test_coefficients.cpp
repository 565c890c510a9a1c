#include <cmath>

#include "doctest.h"
#include "mesa/coefficients.hpp"

using namespace mesa;

namespace {

// The three-stage coefficient of the step-down/step-up scenario:
// -1 on [0, .75), -5 on [.75, 1), -1 afterwards.
SourceCoefficient stepped_source() {
  return SourceCoefficient(
      {{0.0, -1.0}, {0.75, -5.0}, {1.0, -1.0}}, 5.0);
}

}  // namespace

TEST_CASE("stage selection is right-continuous") {
  auto lam = stepped_source();
  CHECK(lam(0.3, 0.5) == -1.0);
  CHECK(lam(0.3, 0.9) == -5.0);
  CHECK(lam(0.3, 0.75) == -5.0);  // at the switch instant the new stage rules
  CHECK(lam(0.3, 1.0) == -1.0);
  CHECK(lam(0.3, 5.0) == -1.0);
}

TEST_CASE("source respects its bound and rejects violations") {
  auto lam = stepped_source();
  for (double t : {0.0, 0.2, 0.75, 0.8, 1.0, 2.0})
    CHECK(std::abs(lam(0.0, t)) <= lam.bound());
  CHECK_THROWS_AS(SourceCoefficient::constant(-3.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(SourceCoefficient({{0.1, -1.0}}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(SourceCoefficient({{0.0, -1.0}, {0.5, -1.0}, {0.5, -2.0}}, 5.0),
                  std::invalid_argument);
}

TEST_CASE("time integral is analytic across stages") {
  auto lam = stepped_source();
  CHECK(lam.time_integral(0.0, 0.0, 0.5) == doctest::Approx(-0.5));
  CHECK(lam.time_integral(0.0, 0.0, 0.9) == doctest::Approx(-0.75 - 5.0 * 0.15));
  CHECK(lam.time_integral(0.0, 0.0, 1.2) ==
        doctest::Approx(-0.75 - 5.0 * 0.25 - 0.2));
  CHECK(lam.time_integral(0.0, 0.9, 0.9) == 0.0);
  CHECK(lam.time_integral(0.0, 1.2, 0.9) ==
        doctest::Approx(-lam.time_integral(0.0, 0.9, 1.2)));
}

TEST_CASE("next_switch reports upcoming stage changes") {
  auto lam = stepped_source();
  CHECK(lam.next_switch(0.0).value() == 0.75);
  CHECK(lam.next_switch(0.75).value() == 1.0);
  CHECK_FALSE(lam.next_switch(1.0).has_value());
}

TEST_CASE("spatial profile stages evaluate by interpolation") {
  auto g = build_grid(Geometry::cartesian(0.0, 1.0), 10);
  Field prof(g);
  for (std::size_t i = 0; i < prof.size(); ++i) prof[i] = g->node(i);
  SourceCoefficient lam({{0.0, prof}}, 2.0);
  CHECK(lam(0.5, 0.0) == doctest::Approx(0.5));
  CHECK(lam(0.55, 0.0) == doctest::Approx(0.55));
  CHECK(lam(2.0, 0.0) == doctest::Approx(1.0));  // clamped
  CHECK_FALSE(lam.constant_in_space());
}

TEST_CASE("boundary data bounds") {
  auto f = BoundaryData::constant(1.0, 5.0);
  CHECK(f(0.3) == 1.0);
  f.validate_range(0.0, 2.0);
  CHECK_THROWS_AS(BoundaryData::constant(-1.0, 5.0), std::invalid_argument);
  BoundaryData g([](double t) { return 10.0 + t; }, 5.0);
  CHECK_THROWS_AS(g.validate_range(0.0, 1.0), std::invalid_argument);
}

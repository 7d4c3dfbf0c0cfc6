#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ruelle/error.hpp"
#include "ruelle/maps.hpp"
#include "ruelle/rng.hpp"
#include "ruelle/transfer.hpp"

using namespace ruelle;

TEST_CASE("doubling map constants") {
  const auto f = build_expanding_map(2, {});
  CHECK(f.lambda_star() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(f.distortion() == doctest::Approx(0.0));
}

TEST_CASE("trig perturbation constants") {
  const auto f = build_expanding_map(2, {{1, 0.05, 0.0}});
  CHECK(f.lambda_star() == doctest::Approx(2.0 - 0.1 * std::numbers::pi).epsilon(1e-10));
  double d = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = i / 10000.0;
    d = std::max(d, std::abs(f.second_derivative(x) / (f.derivative(x) * f.derivative(x))));
  }
  CHECK(f.distortion() == doctest::Approx(d).epsilon(1e-12));
  CHECK(f.analytic_bound() > 1.0);
}

TEST_CASE("non-expanding parameters are rejected") {
  CHECK_THROWS_AS(build_expanding_map(2, {{1, 0.2, 0.0}}), NonExpanding);
  CHECK_THROWS_AS(build_expanding_map(2, {{1, 0.0, 0.16}}), NonExpanding);
  CHECK_THROWS(build_expanding_map(1, {}));
}

TEST_CASE("lift property") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto f = random_expanding_map(11, s);
    for (double x : {0.0, 0.13, 0.5, 0.77})
      CHECK(f.lift(x + 1.0) - f.lift(x) == doctest::Approx(f.degree()).epsilon(1e-13));
  }
}

TEST_CASE("inverse branches of the doubling map") {
  const auto f = doubling_map();
  auto b = inverse_branches(f, 0.5);
  REQUIRE(b.size() == 2);
  CHECK(b[0].y == doctest::Approx(0.25));
  CHECK(b[1].y == doctest::Approx(0.75));
  CHECK(b[0].derivative == doctest::Approx(2.0));
  b = inverse_branches(f, 0.0);
  CHECK(b[0].y == doctest::Approx(0.0));
  CHECK(b[1].y == doctest::Approx(0.5));
}

TEST_CASE("inverse branches against the bisection oracle") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto f = s == 0 ? build_expanding_map(2, {{1, 0.05, 0.0}}) : random_expanding_map(3, s);
    auto g = make_stream(99, s);
    for (int k = 0; k < 20; ++k) {
      const double x = k == 0 ? 0.3 : uniform01(g);
      const auto br = inverse_branches(f, x);
      const auto ys = oracle::bisection_preimages(f, x);
      REQUIRE(br.size() == static_cast<std::size_t>(f.degree()));
      REQUIRE(ys.size() == br.size());
      for (std::size_t i = 0; i < ys.size(); ++i) {
        CHECK(br[i].y == doctest::Approx(ys[i]).epsilon(1e-12));
        CHECK(circle_distance(f(br[i].y) - x) <= 1e-12);
        CHECK(br[i].derivative >= f.lambda_star() - 1e-12);
        if (i > 0) CHECK(br[i].y > br[i - 1].y);
      }
    }
  }
}

TEST_CASE("trig observable evaluation") {
  const auto c = TrigObservable::cosine(1);
  CHECK(c.value(0.0) == doctest::Approx(1.0));
  CHECK(std::abs(c.value(0.25)) < 1e-15);
  CHECK(TrigObservable::sine(1).value(0.25) == doctest::Approx(1.0));
  CHECK(c.derivative(0.25) == doctest::Approx(-2.0 * std::numbers::pi));
  const TrigObservable2D two({{{1, 0}, 1.0}, {{-1, 0}, 1.0}}, true);
  CHECK(two.eval(0.5, 0.0).real() == doctest::Approx(-2.0));
  CHECK_THROWS(TrigObservable({{1, 1.0}, {-1, 2.0}}, true));
}

TEST_CASE("centered observable drops the mean") {
  const auto h = TrigObservable::constant(3.0) + TrigObservable::cosine(2);
  CHECK(std::abs(h.centered().coeff(0)) == 0.0);
  CHECK(h.centered().value(0.1) == doctest::Approx(h.value(0.1) - 3.0));
  CHECK(h.max_freq() == 2);
}

TEST_CASE("bump profile") {
  const Bump psi(0.1, 0.2);
  CHECK(psi(0.0) == 1.0);
  CHECK(psi(0.1) == doctest::Approx(1.0));
  CHECK(psi(0.2) == doctest::Approx(0.0));
  CHECK(psi(0.5) == 0.0);
  CHECK(psi(0.95) == doctest::Approx(1.0));  // periodic: distance 0.05
  // Continuity of the first two derivatives at the shoulder ends.
  const double h = 1e-4;
  for (double x : {0.1, 0.2}) {
    const double d2 = (psi(x + h) - 2 * psi(x) + psi(x - h)) / (h * h);
    CHECK(std::abs(d2) < 1e-2 * 1e3);
  }
}

TEST_CASE("contracting map validation") {
  const ContractingCircleMap m(ContractingCircleMap::default_kappa());
  CHECK(m.derivative(0.0) > 0.0);
  CHECK(m.derivative(0.0) < 1.0);
  CHECK(m.derivative(0.5) > 1.0);
  CHECK(m.contraction_bound() < 1.0);
  CHECK_THROWS_AS(ContractingCircleMap(0.5), InvalidContractingMap);
  CHECK_THROWS_AS(ContractingCircleMap(-0.1), InvalidContractingMap);
}

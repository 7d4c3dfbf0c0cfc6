#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ruelle/error.hpp"
#include "ruelle/quadrature.hpp"
#include "ruelle/rng.hpp"
#include "ruelle/transfer.hpp"

using namespace ruelle;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("transfer of constants and cosines under doubling") {
  const auto f = doubling_map();
  for (double x : {0.0, 0.1, 0.37, 0.8}) {
    CHECK(apply_transfer(f, [](double) { return 1.0; }, x) == doctest::Approx(1.0));
    CHECK(std::abs(apply_transfer(f, [](double y) { return std::cos(kTwoPi * y); }, x)) < 1e-14);
  }
  CHECK(apply_transfer(f, [](double y) { return y - 0.5; }, 0.8) == doctest::Approx(0.15));
}

TEST_CASE("Bernoulli eigenrelation for the doubling map") {
  const auto f = doubling_map();
  for (int k = 1; k <= 3; ++k) {
    for (int i = 0; i < 50; ++i) {
      const double x = (i + 0.5) / 50.0;
      const double lhs = apply_transfer(f, [k](double y) { return oracle::bernoulli(k, y); }, x);
      CHECK(std::abs(lhs - std::ldexp(oracle::bernoulli(k, x), -k)) < 1e-10);
    }
  }
}

TEST_CASE("transfer derivative identity") {
  const auto f = doubling_map();
  const RealFn b1 = [](double y) { return y - 0.5; };
  const RealFn one = [](double) { return 1.0; };
  const RealFn zero = [](double) { return 0.0; };
  CHECK(std::abs(transfer_derivative(f, one, zero, 0.3)) < 1e-14);
  CHECK(transfer_derivative(f, b1, one, 0.3) == doctest::Approx(0.5));

  const auto g = build_expanding_map(2, {{1, 0.05, 0.0}});
  const RealFn h = [](double y) { return std::cos(kTwoPi * y); };
  const RealFn hp = [](double y) { return -kTwoPi * std::sin(kTwoPi * y); };
  const double fd = (apply_transfer(g, h, 0.3 + 1e-6) - apply_transfer(g, h, 0.3 - 1e-6)) / 2e-6;
  CHECK(std::abs(transfer_derivative(g, h, hp, 0.3) - fd) < 1e-5);
  CHECK_THROWS_AS(transfer_derivative(g, h, h, 0.3), std::invalid_argument);
}

TEST_CASE("transfer derivative matches finite differences on random maps") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto f = random_expanding_map(21, s);
    const auto poly = random_trig_polynomial(22, s, 4);
    const RealFn h = [&](double y) { return poly.value(y); };
    const RealFn hp = [&](double y) { return poly.derivative(y); };
    auto g = make_stream(23, s);
    for (int i = 0; i < 10; ++i) {
      const double x = 0.01 + 0.98 * uniform01(g);
      const double fd = (apply_transfer(f, h, x + 1e-6) - apply_transfer(f, h, x - 1e-6)) / 2e-6;
      CHECK(std::abs(transfer_derivative(f, h, hp, x) - fd) < 1e-5);
    }
  }
}

TEST_CASE("mass preservation and positivity") {
  const auto f = build_expanding_map(3, {{1, 0.1, -0.05}, {2, 0.02, 0.0}});
  const RealFn h = [](double y) { return 1.0 + 0.9 * std::sin(kTwoPi * y) + 0.3 * std::cos(3 * kTwoPi * y); };
  const RealFn lh = [&](double x) { return apply_transfer(f, h, x); };
  CHECK(integrate_composite(lh, 0.0, 1.0, 512, 8) == doctest::Approx(integrate_composite(h, 0.0, 1.0, 512, 8)).epsilon(1e-10));
  const RealFn pos = [](double y) { return std::exp(std::sin(kTwoPi * y)) * 0.1; };
  for (int i = 0; i < 100; ++i) CHECK(apply_transfer(f, pos, i / 100.0) >= 0.0);
}

TEST_CASE("Lasota-Yorke report on trivial inputs") {
  const auto f = doubling_map();
  auto r = verify_ly(f, TrigObservable::constant(1.0));
  CHECK(r.l1_out == doctest::Approx(1.0));
  CHECK(r.w11_deriv_out < 1e-12);
  CHECK(r.satisfied);
  r = verify_ly(f, TrigObservable::cosine(1));
  CHECK(r.l1_out < 1e-12);
  CHECK(r.l1_in == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-10));
  CHECK(r.bound_rhs == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.satisfied);
}

TEST_CASE("Lasota-Yorke on random trig polynomials") {
  const auto f = build_expanding_map(2, {{1, 0.05, 0.0}});
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = verify_ly(f, random_trig_polynomial(31, s));
    CHECK(r.satisfied);
    CHECK(r.satisfied == (r.l1_out <= r.l1_in * (1 + r.tol) && r.w11_deriv_out <= r.bound_rhs * (1 + r.tol)));
  }
}

TEST_CASE("Lasota-Yorke on grid functions") {
  const auto f = build_expanding_map(2, {{1, 0.05, 0.0}});
  std::vector<double> g(64);
  auto rng = make_stream(5, 0);
  for (double& v : g) v = uniform01(rng) - 0.3;
  CHECK(verify_ly(f, g).satisfied);
}

TEST_CASE("contracting push-forward basics") {
  const ContractingCircleMap m(ContractingCircleMap::default_kappa());
  const RealFn one = [](double) { return 1.0; };
  const RealFn c = [](double x) { return std::cos(kTwoPi * x); };
  const RealFn hsin = [](double x) { return 1.0 + 0.5 * std::sin(kTwoPi * x); };
  // n = 0 is the plain integral.
  CHECK(contracting_pushforward(m, hsin, c, 0) == doctest::Approx(0.0).epsilon(1e-12));
  const RealFn hc = [](double x) { return 1.0 + std::cos(kTwoPi * x); };
  CHECK(contracting_pushforward(m, hc, c, 0) == doctest::Approx(0.5).epsilon(1e-12));
  // n = 1, phi = h = 1: the mass of the bump.
  const RealFn psi = [&](double x) { return m.bump()(x); };
  CHECK(contracting_pushforward(m, one, one, 1) ==
        doctest::Approx(integrate_composite(psi, -0.5, 0.5, 4096, 8)).epsilon(1e-10));
}

TEST_CASE("contracting sequence converges to c phi(0)") {
  const ContractingCircleMap m(ContractingCircleMap::default_kappa());
  const RealFn one = [](double) { return 1.0; };
  const RealFn c = [](double x) { return std::cos(kTwoPi * x); };
  const auto seq = contracting_sequence(m, one, c, 30);
  const auto mass = contracting_sequence(m, one, one, 30);
  CHECK(std::abs(seq[30] - mass[30]) < 1e-10);
}

TEST_CASE("contracting decay fit") {
  const ContractingCircleMap m(ContractingCircleMap::default_kappa());
  const RealFn h = [](double x) { return 1.0 + 0.5 * std::sin(kTwoPi * x); };
  for (const auto& phi : {TrigObservable::cosine(1), TrigObservable::sine(1)}) {
    const auto d = contracting_decay(m, h, phi, 12);
    CHECK(d.rate < 1.0);
    CHECK(d.rate > 0.0);
    // Residuals bounded by C r^n with r = max(contraction_bound, f'(0)) + 0.05.
    const double r = std::max(m.contraction_bound(), m.derivative(0.0)) + 0.05;
    double C = 0.0;
    for (int n = 1; n <= 12; ++n) C = std::max(C, d.residuals[static_cast<std::size_t>(n)] / std::pow(r, n));
    for (int n = 1; n <= 12; ++n) CHECK(d.residuals[static_cast<std::size_t>(n)] <= C * std::pow(r, n) * (1 + 1e-12));
  }
}

TEST_CASE("constant mass sequence is a degenerate fit") {
  const ContractingCircleMap m(ContractingCircleMap::default_kappa());
  const RealFn one = [](double) { return 1.0; };
  CHECK_THROWS_AS(contracting_decay(m, one, TrigObservable::constant(1.0), 20), DegenerateFit);
}

TEST_CASE("density supported away from the bump dies after one step") {
  const ContractingCircleMap m(ContractingCircleMap::default_kappa());
  const RealFn far = [](double x) {
    const double d = circle_distance(x - 0.5);
    return d < 0.2 ? 1.0 - d / 0.2 : 0.0;
  };
  const RealFn c = [](double x) { return std::cos(kTwoPi * x); };
  const auto seq = contracting_sequence(m, far, c, 6);
  for (int n = 2; n <= 6; ++n) CHECK(seq[static_cast<std::size_t>(n)] == 0.0);
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include <omp.h>

#include "oracles.hpp"
#include "ruelle/maps.hpp"
#include "ruelle/quadrature.hpp"
#include "ruelle/rng.hpp"
#include "ruelle/spectral.hpp"

using namespace ruelle;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double l1_hat_vs_cells(const HatCoefficients& h, const std::vector<double>& cells) {
  const int m = static_cast<int>(cells.size());
  const RealFn d = [&](double x) {
    const int c = std::min(m - 1, static_cast<int>(x * m));
    return std::abs(h(x) - cells[static_cast<std::size_t>(c)]);
  };
  return integrate_composite(d, 0.0, 1.0, m, 4);
}
}  // namespace

TEST_CASE("hat coefficients reconstruct and integrate") {
  HatCoefficients h{4, {1.0, 2.0, 3.0, 4.0}};
  CHECK(h(0.0) == doctest::Approx(1.0));
  CHECK(h(0.125) == doctest::Approx(1.5));
  CHECK(h(0.875) == doctest::Approx(2.5));  // periodic wrap between c_3 and c_0
  CHECK(h(1.0) == doctest::Approx(h(0.0)));
  CHECK(h.integral() == doctest::Approx(2.5));
  const RealFn rec = [&](double x) { return h(x); };
  CHECK(integrate_composite(rec, 0.0, 1.0, 64, 4) == doctest::Approx(h.integral()).epsilon(1e-14));
}

TEST_CASE("projection examples") {
  for (int n : {8, 33, 128}) {
    const auto c = project([](double) { return 1.0; }, n);
    for (double v : c.c) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
  }
  const auto s = project([](double y) { return std::sin(kTwoPi * y); }, 4);
  CHECK(s.c[0] == doctest::Approx(-s.c[2]).epsilon(1e-14));
  CHECK(s.c[1] == doctest::Approx(-s.c[3]).epsilon(1e-14));
  const RealFn h = [](double y) { return 1.0 + std::cos(kTwoPi * y) + 0.3 * std::sin(6 * kTwoPi * y); };
  CHECK(project(h, 64).integral() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("projection error bound") {
  auto e = projection_error_check(TrigObservable::constant(1.0), 32);
  CHECK(e.measured < 1e-14);
  CHECK(e.bound == doctest::Approx(1.0 / 32));
  e = projection_error_check(TrigObservable::sine(1), 64);
  CHECK(e.bound == doctest::Approx((4.0 + 2.0 / std::numbers::pi) / 64).epsilon(1e-10));
  CHECK(e.measured <= e.bound);
}

TEST_CASE("projection error ratio across refinement") {
  // Spec example: n = 16 vs 128 for sin(8 pi x) should have ratio about 1/8.
  const double e16 = projection_error_check(TrigObservable::sine(4), 16).measured;
  const double e128 = projection_error_check(TrigObservable::sine(4), 128).measured;
  CHECK(e128 / e16 == doctest::Approx(1.0 / 8.0).epsilon(0.25));
}

TEST_CASE("Galerkin relation: projecting a reconstruction gives T c") {
  const int n = 16;
  auto g = make_stream(41, 0);
  HatCoefficients c{n, std::vector<double>(n)};
  for (double& v : c.c) v = uniform01(g);
  const auto p = project([&](double x) { return c(x); }, n);
  for (int i = 0; i < n; ++i) {
    const double tc = (c.c[static_cast<std::size_t>((i + n - 1) % n)] + 4 * c.c[static_cast<std::size_t>(i)] +
                       c.c[static_cast<std::size_t>((i + 1) % n)]) / 6.0;
    CHECK(p.c[static_cast<std::size_t>(i)] == doctest::Approx(tc).epsilon(1e-12));
  }
  CHECK((mass_apply(c.vector()) - p.vector()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((mass_solve(mass_apply(c.vector())) - c.vector()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("assembly agrees with the midpoint oracle for the doubling map") {
  const auto m = assemble_transfer_matrix(doubling_map(), 8);
  const Eigen::MatrixXd o = oracle::midpoint_matrix(doubling_map(), 8, 1 << 21);
  CHECK((m.entries - o).cwiseAbs().maxCoeff() <= 1e-12);
  for (int j = 0; j < 8; ++j) CHECK(m.entries.col(j).sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("assembly against the midpoint oracle for a trig perturbation") {
  const auto f = build_expanding_map(2, {{1, 0.05, 0.0}});
  const auto m = assemble_transfer_matrix(f, 16);
  const Eigen::MatrixXd o = oracle::midpoint_matrix(f, 16, 1 << 18);
  CHECK((m.entries - o).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("assembled matrices are column stochastic and nonnegative") {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto f = s == 0 ? build_expanding_map(2, {{1, 0.05, 0.0}}) : random_expanding_map(51, s);
    const auto m = assemble_transfer_matrix(f, 128);
    CHECK(m.entries.minCoeff() >= 0.0);
    CHECK((m.entries.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(m.warnings.empty());
  }
}

TEST_CASE("parallel and serial assembly agree") {
  const auto f = build_expanding_map(3, {{1, 0.1, 0.02}, {3, 0.01, 0.0}});
  const auto a = assemble_transfer_matrix(f, 96);
  const auto b = reference::assemble_transfer_matrix(f, 96);
  CHECK((a.entries - b.entries).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("assembly is bitwise independent of the thread count") {
  const auto f = build_expanding_map(2, {{1, 0.05, 0.0}});
  omp_set_num_threads(1);
  const auto a = assemble_transfer_matrix(f, 128);
  omp_set_num_threads(4);
  const auto b = assemble_transfer_matrix(f, 128);
  omp_set_num_threads(omp_get_num_procs());
  CHECK(a.entries == b.entries);
}

TEST_CASE("powers stay stochastic and mass is preserved") {
  const auto m = assemble_transfer_matrix(build_expanding_map(2, {{1, 0.05, 0.0}}), 64);
  Eigen::MatrixXd p = m.entries;
  for (int k = 1; k < 50; ++k) p = m.entries * p;
  CHECK((p.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-10);
  auto g = make_stream(42, 0);
  Eigen::VectorXd c(64);
  for (int i = 0; i < 64; ++i) c[i] = uniform01(g);
  CHECK((m.entries * c).sum() / 64 == doctest::Approx(c.sum() / 64).epsilon(1e-12));
}

TEST_CASE("leading mode of the doubling map is Lebesgue") {
  const auto lm = leading_mode(assemble_transfer_matrix(doubling_map(), 64));
  CHECK(std::abs(lm.eigenvalue - 1.0) <= 1e-10);
  for (double v : lm.density.c) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("leading mode matches the Ulam oracle") {
  const auto f = build_expanding_map(2, {{1, 0.05, 0.0}});
  const auto m = assemble_transfer_matrix(f, 256);
  const auto lm = leading_mode(m);
  CHECK(std::abs(lm.eigenvalue - 1.0) <= 1e-10);
  CHECK(lm.density.integral() == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : lm.density.c) CHECK(v >= 0.0);
  CHECK((m.entries * lm.density.vector() - lm.density.vector()).lpNorm<1>() / 256 <= 1e-9);
  const auto ulam = oracle::ulam_density(f, 4096);
  CHECK(l1_hat_vs_cells(lm.density, ulam) <= 5e-3);
}

TEST_CASE("top spectrum is bounded by one") {
  const auto sp = top_spectrum(assemble_transfer_matrix(build_expanding_map(2, {{1, 0.05, 0.0}}), 256), 8);
  REQUIRE(sp.size() == 8);
  CHECK(std::abs(sp[0] - 1.0) <= 1e-10);
  for (std::size_t k = 0; k < sp.size(); ++k) {
    CHECK(std::abs(sp[k]) <= 1.0 + 1e-10);
    if (k > 0) CHECK(std::abs(sp[k]) <= std::abs(sp[k - 1]) + 1e-15);
  }
}

TEST_CASE("spectral report invariants") {
  const auto r = spectral_report(build_expanding_map(2, {{1, 0.05, 0.0}}), 128, 4);
  CHECK(std::abs(r.leading - 1.0) <= 1e-10);
  CHECK(r.density.integral() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.essential_bound == doctest::Approx(1.0 / (2.0 - 0.1 * std::numbers::pi)).epsilon(1e-10));
  CHECK(r.gap == doctest::Approx(1.0 - std::abs(r.spectrum[1])));
}

// Known red: the periodic hat discretization does not carry the Bernoulli modes.
TEST_CASE("doubling subleading spectrum approaches powers of one half") {
  const auto sp = top_spectrum(assemble_transfer_matrix(doubling_map(), 512), 4);
  for (int k = 1; k < 4; ++k) CHECK(std::abs(sp[static_cast<std::size_t>(k)] - std::ldexp(1.0, -k)) <= 2e-2);
}

TEST_CASE("doubling |lambda2 - 0.5| decreases under refinement") {
  double prev = 1e300;
  for (int n : {128, 256, 512}) {
    const auto sp = top_spectrum(assemble_transfer_matrix(doubling_map(), n), 2);
    const double d = std::abs(sp[1] - 0.5);
    CHECK(d < prev);
    prev = d;
  }
}

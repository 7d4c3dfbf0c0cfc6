#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "ruelle/error.hpp"
#include "ruelle/perturb.hpp"
#include "ruelle/quadrature.hpp"

using namespace ruelle;

namespace {
ExpandingCircleMap sin_perturbed(double eps) { return build_expanding_map(2, {{1, 0.0, eps}}); }

// L1 distance between a hat density and bin densities on a uniform grid.
double l1_vs_bins(const HatCoefficients& h, const std::vector<double>& bins) {
  const int m = static_cast<int>(bins.size());
  const RealFn d = [&](double x) {
    return std::abs(h(x) - bins[static_cast<std::size_t>(std::min(m - 1, static_cast<int>(x * m)))]);
  };
  return integrate_composite(d, 0.0, 1.0, m, 8);
}
}  // namespace

TEST_CASE("norms") {
  Eigen::VectorXd c(4);
  c << 1.0, -1.0, 2.0, 0.0;
  CHECK(weak_norm(c) == doctest::Approx(1.0));
  CHECK(strong_norm(c) > weak_norm(c));
  CHECK(strong_norm(Eigen::VectorXd::Ones(8)) == doctest::Approx(1.0));
}

TEST_CASE("triple norm of identical maps is zero") {
  const auto f = build_expanding_map(2, {{1, 0.05, 0.0}});
  const auto t = triple_norm_distance(f, f, 64);
  CHECK(t.lower == 0.0);
  CHECK(t.upper == 0.0);
}

TEST_CASE("triple norm scales linearly and monotonically") {
  const auto f0 = doubling_map();
  std::vector<double> v;
  for (double eps : {0.005, 0.01, 0.02}) {
    const auto t = triple_norm_distance(f0, sin_perturbed(eps), 256);
    CHECK(t.lower <= t.upper + 1e-15);
    v.push_back(t.lower);
  }
  CHECK(v[0] <= v[1]);
  CHECK(v[1] <= v[2]);
  CHECK(v[0] / v[1] == doctest::Approx(0.5).epsilon(0.15));
  CHECK(v[1] / v[2] == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("deterministic stability table") {
  const auto t = deterministic_stability(doubling_map(), {0.0, 0.0125, 0.025, 0.05}, 256);
  REQUIRE(t.rows.size() == 4);
  const auto& z = t.rows[0];
  CHECK(z.triple_norm <= 1e-10);
  CHECK(z.lambda2_drift <= 1e-10);
  CHECK(z.density_drift <= 1e-10);
  for (const auto& r : t.rows) {
    CHECK(std::abs(r.leading - 1.0) <= 1e-10);
    CHECK(r.triple_norm >= 0.0);
    CHECK(r.density_drift >= 0.0);
  }
  CHECK(t.rows[1].lambda2_drift <= t.rows[2].lambda2_drift);
  CHECK(t.rows[2].lambda2_drift <= t.rows[3].lambda2_drift);
  CHECK(t.fitted_exponent > 0.0);
  CHECK(t.fitted_D > 0.0);
}

TEST_CASE("non-expanding perturbation propagates") {
  CHECK_THROWS_AS(deterministic_stability(doubling_map(), {0.5}, 64), NonExpanding);
}

TEST_CASE("stochastic operator of a single map") {
  const auto f = build_expanding_map(2, {{1, 0.05, 0.0}});
  const auto s = stochastic_operator({f}, {1.0}, 64);
  CHECK((s.matrix.entries - assemble_transfer_matrix(f, 64).entries).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(s.ly.mean_inv_lambda == doctest::Approx(1.0 / f.lambda_star()));
}

TEST_CASE("stochastic operator validation") {
  CHECK_THROWS(stochastic_operator({doubling_map()}, {0.5}, 64));
  CHECK_THROWS(stochastic_operator({doubling_map(), doubling_map()}, {1.5, -0.5}, 64));
}

TEST_CASE("averaged operator is stochastic and its LY constants are averages") {
  const std::vector<ExpandingCircleMap> maps{sin_perturbed(0.05), sin_perturbed(-0.05)};
  const auto s = stochastic_operator(maps, {0.5, 0.5}, 256);
  CHECK((s.matrix.entries.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK(s.ly.mean_inv_lambda <= s.ly.max_inv_lambda + 1e-15);
  CHECK(s.ly.mean_B <= s.ly.max_B + 1e-15);
  CHECK(s.ly.mean_inv_lambda < 1.0);
}

TEST_CASE("averaged invariant density matches the random orbit histogram") {
  const std::vector<ExpandingCircleMap> maps{sin_perturbed(0.05), sin_perturbed(-0.05)};
  const auto s = stochastic_operator(maps, {0.5, 0.5}, 256);
  const auto lm = leading_mode(s.matrix);
  const auto hist = oracle::orbit_histogram(maps, 10'000'000, 7, 256);
  CHECK(l1_vs_bins(lm.density, hist) <= 5e-3);
}

TEST_CASE("stochastic stability rows") {
  const auto rows = stochastic_stability(doubling_map(), {0.0, 0.01, 0.02, 0.04}, 5, 256);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].row.density_drift <= 1e-10);
  CHECK(rows[0].row.triple_norm <= 1e-10);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].row.density_drift >= rows[i - 1].row.density_drift);
  for (const auto& r : rows) {
    CHECK(r.ly.mean_inv_lambda < 1.0);
    CHECK(r.ly.mean_inv_lambda <= r.ly.max_inv_lambda + 1e-15);
    CHECK(std::abs(r.row.leading - 1.0) <= 1e-10);
  }
}

TEST_CASE("noise family") {
  const auto fam = noise_family(doubling_map(), 0.04, 5);
  REQUIRE(fam.size() == 5);
  CHECK_THROWS_AS(noise_family(doubling_map(), 0.5, 3), NonExpanding);
}

TEST_CASE("density L1 distance") {
  HatCoefficients a{4, {1, 1, 1, 1}}, b{4, {1, 1, 1, 1}};
  CHECK(density_l1_distance(a, b) == 0.0);
  b.c = {2, 2, 2, 2};
  CHECK(density_l1_distance(a, b) == doctest::Approx(1.0));
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ruelle/error.hpp"
#include "ruelle/fit.hpp"
#include "ruelle/toral.hpp"

using namespace ruelle;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

FourierField2D field(std::initializer_list<std::pair<Lattice, double>> terms, int K) {
  FourierField2D f;
  f.K = K;
  for (const auto& [k, c] : terms) f.coeffs[k] = c;
  return f;
}

// int phi(x) h(A^{-n} x) dx - int phi int h on an N x N grid (exact for low frequencies).
double grid_correlation(const FourierField2D& phi, const FourierField2D& h, const ToralAutomorphism& t, int n, int N) {
  const IntMatrix2 B = t.power(-n);
  auto eval = [](const FourierField2D& f, double y1, double y2) {
    double v = 0.0;
    for (const auto& [k, c] : f.coeffs) v += (c * std::polar(1.0, kTwoPi * (k[0] * y1 + k[1] * y2))).real();
    return v;
  };
  double s = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double x1 = static_cast<double>(i) / N, x2 = static_cast<double>(j) / N;
      const double y1 = static_cast<double>(B.a11) * x1 + static_cast<double>(B.a12) * x2;
      const double y2 = static_cast<double>(B.a21) * x1 + static_cast<double>(B.a22) * x2;
      s += eval(phi, x1, x2) * eval(h, y1, y2);
    }
  return s / (static_cast<double>(N) * N) - (phi.at({0, 0}) * h.at({0, 0})).real();
}
}  // namespace

TEST_CASE("cat map eigen data") {
  const auto t = cat_map();
  const double lam = (3.0 + std::sqrt(5.0)) / 2.0;
  CHECK(t.lambda() == doctest::Approx(lam).epsilon(1e-15));
  CHECK(t.v_u()[1] / t.v_u()[0] == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-14));
  const auto& A = t.matrix();
  const Vec2 au{A.a11 * t.v_u()[0] + A.a12 * t.v_u()[1], A.a21 * t.v_u()[0] + A.a22 * t.v_u()[1]};
  const Vec2 as{A.a11 * t.v_s()[0] + A.a12 * t.v_s()[1], A.a21 * t.v_s()[0] + A.a22 * t.v_s()[1]};
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(au[static_cast<std::size_t>(i)] - lam * t.v_u()[static_cast<std::size_t>(i)]) <= 1e-12);
    CHECK(std::abs(as[static_cast<std::size_t>(i)] - t.v_s()[static_cast<std::size_t>(i)] / lam) <= 1e-12);
  }
  CHECK(std::abs(t.v_u()[0] * t.v_s()[0] + t.v_u()[1] * t.v_s()[1]) <= 1e-12);
  CHECK(std::hypot(t.v_u()[0], t.v_u()[1]) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("automorphism validation") {
  CHECK_THROWS_AS(toral_eigen({1, 0, 0, 1}), NotHyperbolic);
  CHECK_THROWS_AS(toral_eigen({1, 1, 0, 1}), NotHyperbolic);
  CHECK_THROWS_AS(toral_eigen({2, 1, 3, 2}), NotSymmetric);
  CHECK_THROWS(toral_eigen({3, 1, 1, 2}));  // det 5
  CHECK(toral_eigen({5, 2, 2, 1}).lambda() == doctest::Approx(3.0 + 2.0 * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("integer powers") {
  const auto t = cat_map();
  const IntMatrix2 p = t.power(3);
  CHECK(p.apply({1, 0}) == Lattice{13, 8});
  const IntMatrix2 q = t.power(-3) * p;
  CHECK(q.a11 == 1);
  CHECK(q.a12 == 0);
  CHECK(q.a21 == 0);
  CHECK(q.a22 == 1);
  CHECK(t.iterate({1, 0}, 1) == Lattice{2, 1});
  CHECK_FALSE(t.iterate({1, 0}, 80).has_value());
  CHECK_THROWS(t.power(200));
}

TEST_CASE("Fourier pushforward examples") {
  const auto t = cat_map();
  auto f = field({{{2, 1}, 1.0}, {{1, 0}, 0.5}, {{0, 0}, 3.0}}, 8);
  const auto id = fourier_pushforward(f, t, 0);
  CHECK(id.field.coeffs == f.coeffs);
  CHECK(id.dropped_count == 0);
  const auto one = fourier_pushforward(f, t, 1);
  // new_k = old_{A k}: the (2, 1) coefficient sits at (1, 0) afterwards.
  CHECK(one.field.at({1, 0}) == 1.0);
  CHECK(one.field.at({0, 0}) == 3.0);
  CHECK(one.field.at({1, -1}) == 0.5);
  const auto cst = field({{{0, 0}, 2.0}}, 4);
  for (int n : {1, 5, 20}) CHECK(fourier_pushforward(cst, t, n).field.coeffs == cst.coeffs);
}

TEST_CASE("pushforward energy is conserved up to drops") {
  const auto t = cat_map();
  const auto f = FourierField2D::smooth_profile(12, 2.0);
  for (int n : {0, 1, 2, 4, 8}) {
    const auto p = fourier_pushforward(f, t, n);
    CHECK(p.field.energy() <= f.energy() * (1 + 1e-15));
    CHECK(p.field.energy() + p.dropped_energy == doctest::Approx(f.energy()).epsilon(1e-14));
    if (p.dropped_count == 0) CHECK(p.field.energy() == doctest::Approx(f.energy()).epsilon(1e-15));
  }
}

TEST_CASE("correlations of trig polynomials vanish exactly") {
  const auto t = cat_map();
  const auto phi = field({{{1, 0}, 0.5}, {{-1, 0}, 0.5}}, 4);
  const auto h = field({{{2, 1}, 0.5}, {{-2, -1}, 0.5}}, 4);
  const auto c = correlation_sequence(phi, h, t, 30);
  CHECK(std::abs(c[1]) > 0.1);
  for (std::size_t n = 2; n < c.size(); ++n) CHECK(c[n] == 0.0);
  CHECK(correlation_vanishing_time(phi, h, t) == 2);
  for (int n = 0; n <= 3; ++n) CHECK(std::abs(c[static_cast<std::size_t>(n)].real() - grid_correlation(phi, h, t, n, 128)) <= 1e-12);
}

TEST_CASE("correlations against the grid oracle for mixed supports") {
  const auto t = toral_eigen({5, 2, 2, 1});
  const auto phi = field({{{1, 1}, 0.3}, {{-1, -1}, 0.3}, {{0, 1}, 0.2}, {{0, -1}, 0.2}, {{0, 0}, 1.0}}, 6);
  const auto h = field({{{1, 0}, 0.4}, {{-1, 0}, 0.4}, {{-2, 1}, 0.1}, {{2, -1}, 0.1}, {{0, 0}, 2.0}}, 6);
  const auto c = correlation_sequence(phi, h, t, 12);
  const int n0 = correlation_vanishing_time(phi, h, t);
  for (int n = 0; n <= 2; ++n) CHECK(std::abs(c[static_cast<std::size_t>(n)].real() - grid_correlation(phi, h, t, n, 128)) <= 1e-12);
  for (int n = n0; n <= 12; ++n) CHECK(std::abs(c[static_cast<std::size_t>(n)]) <= 1e-14);
}

TEST_CASE("constant h gives zero correlations") {
  const auto c = correlation_sequence(FourierField2D::smooth_profile(8, 3.0), field({{{0, 0}, 1.0}}, 8), cat_map(), 10);
  for (const auto& v : c) CHECK(v == 0.0);
}

TEST_CASE("smooth profile decay rate") {
  const auto t = cat_map();
  const auto f = FourierField2D::smooth_profile(32, 3.0);
  const auto c = correlation_sequence(f, f, t, 12);
  std::vector<double> xs, ys;
  for (std::size_t n = 1; n < c.size(); ++n)
    if (std::abs(c[n]) > 0.0) xs.push_back(static_cast<double>(n)), ys.push_back(std::log(std::abs(c[n])));
  REQUIRE(xs.size() >= 2);
  CHECK(-fit_line(xs, ys).slope >= 3.0 * std::log(t.lambda()) - 0.1);
}

TEST_CASE("anisotropic weight on the cones") {
  const auto t = cat_map();
  const AnisotropicWeight w(t, {});
  CHECK(w.alpha(1.0, 0.0) == 1.0);
  CHECK(w.alpha(0.0, 1.0) == -1.0);
  CHECK(w.alpha(1.0, 0.1) == 1.0);    // inside A(I+)
  CHECK(w.alpha(0.02, 1.0) == -1.0);  // inside A^{-1}(I-)
  const Lattice ku{89, 55}, ks{-55, 89};  // Fibonacci directions, deep in the cones
  CHECK(w.weight(ku) == doctest::Approx(w.bracket(ku)).epsilon(1e-12));
  CHECK(w.weight(ks) == doctest::Approx(1.0 / w.bracket(ks)).epsilon(1e-12));
  CHECK(w.weight({0, 0}) == 1.0);
  CHECK(w.bracket({3, 4}) == 26.0);
  CHECK(anisotropic_weight(w, {3, 4}) == w.weight({3, 4}));
  CHECK(w.nu2() < 1.0);
  CHECK(w.gamma() > 0.0);
}

TEST_CASE("alpha is continuous and monotone along the projective circle") {
  const auto t = cat_map();
  const AnisotropicWeight w(t, {});
  const int N = 10000;
  const double lip = w.lipschitz(), d = std::numbers::pi / N;
  double prev = w.alpha(1.0, 0.0);
  for (int i = 1; i <= N / 2; ++i) {
    const double th = i * d;  // angle from v_u toward v_s
    const double a = w.alpha(std::cos(th), std::sin(th));
    CHECK(std::abs(a - prev) <= lip * d * (1 + 1e-9));
    CHECK(a <= prev + 1e-15);
    prev = a;
  }
}

TEST_CASE("cone configuration errors") {
  const auto t = cat_map();
  AnisotropicWeightParams p;
  p.cone_u = 1.4;
  p.cone_s = 1.0;
  CHECK_THROWS_AS(AnisotropicWeight(t, p), ConeViolation);
}

TEST_CASE("ratio scan outside Gamma") {
  const auto t = cat_map();
  const auto s = ly_ratio_scan(t, {}, 256);
  CHECK(s.scanned == 513L * 513L - 1);
  CHECK(s.max_ratio_outside_gamma <= s.target + 1e-12);
  CHECK(s.target == doctest::Approx(s.nu_estimate * s.nu_estimate));
  CHECK_FALSE(s.gamma_set.empty());
  CHECK(s.gamma_set.size() < 1000);
  const bool has10 = std::find(s.gamma_set.begin(), s.gamma_set.end(), Lattice{1, 0}) != s.gamma_set.end();
  CHECK(has10);
  CHECK(s.transition_violations == 0);
}

TEST_CASE("ratio rows agree with direct evaluation") {
  const auto t = cat_map();
  const AnisotropicWeight w(t, {});
  const auto s = ly_ratio_scan(t, {}, 64, true);
  REQUIRE(!s.rows.empty());
  for (std::size_t i = 0; i < s.rows.size(); i += 97) {
    const auto& r = s.rows[i];
    const Lattice ak = t.inverse().apply(r.k);
    CHECK(r.ratio == doctest::Approx(w.weight(ak) / w.weight(r.k)).epsilon(1e-12));
    CHECK(r.in_gamma == (w.bracket(r.k) <= s.L));
  }
  // Deep in the unstable cone with large |k| the ratio is below nu^2.
  const Lattice k{144, 89};
  CHECK(w.weight(t.inverse().apply(k)) / w.weight(k) <= w.nu2());
}

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ruelle/maps.hpp"
#include "ruelle/toral.hpp"

namespace oracle {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Inverse of the monotone lift on [0, 1] by plain bisection.
inline double lift_inverse(const ruelle::ExpandingCircleMap& f, double target) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f.lift(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::vector<double> bisection_preimages(const ruelle::ExpandingCircleMap& f, double x) {
  const double f0 = f.lift(0.0);
  std::vector<double> ys;
  for (int m = -8; m <= 8; ++m) {
    const double target = x + m;
    if (target >= f0 && target < f0 + f.degree()) ys.push_back(lift_inverse(f, target));
  }
  std::sort(ys.begin(), ys.end());
  return ys;
}

inline double hat(double u) { return std::max(0.0, 1.0 - std::abs(u)); }

// M_ij = n int hat(n f(x) - i) hat(n x - j) dx by the composite midpoint rule.
inline Eigen::MatrixXd midpoint_matrix(const ruelle::ExpandingCircleMap& f, int n, int per_cell) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const long total = static_cast<long>(n) * per_cell;
  const double dx = 1.0 / static_cast<double>(total);
  for (long s = 0; s < total; ++s) {
    const double x = (static_cast<double>(s) + 0.5) * dx;
    const double u = n * x;
    const int j0 = static_cast<int>(std::floor(u));
    const double tj = u - j0;
    double y = n * f(x);
    y -= n * std::floor(y / n);
    const int i0 = static_cast<int>(std::floor(y));
    const double ti = y - i0;
    const int js[2] = {j0 % n, (j0 + 1) % n};
    const double wj[2] = {1.0 - tj, tj};
    const int is[2] = {i0 % n, (i0 + 1) % n};
    const double wi[2] = {1.0 - ti, ti};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) m(is[a], js[b]) += n * wi[a] * wj[b] * dx;
  }
  return m;
}

inline double bernoulli(int k, double x) {
  switch (k) {
    case 1: return x - 0.5;
    case 2: return x * x - x + 1.0 / 6.0;
    case 3: return x * x * x - 1.5 * x * x + 0.5 * x;
    case 4: return x * x * x * x - 2.0 * x * x * x + x * x - 1.0 / 30.0;
    default: return 0.0;
  }
}

// Ulam cell densities from exact interval preimages, normalized to mean 1.
inline std::vector<double> ulam_density(const ruelle::ExpandingCircleMap& f, int cells, int iterations = 400) {
  struct Flow {
    int from, to;
    double length;
  };
  std::vector<Flow> flows;
  const double f0 = f.lift(0.0);
  for (int i = 0; i < cells; ++i) {
    const double a = static_cast<double>(i) / cells, b = static_cast<double>(i + 1) / cells;
    for (int m = -8; m <= 8; ++m) {
      const double lo = std::max(a + m, f0), hi = std::min(b + m, f0 + f.degree());
      if (hi <= lo) continue;
      const double y0 = lift_inverse(f, lo), y1 = lift_inverse(f, hi);
      for (int j = static_cast<int>(std::floor(y0 * cells)); j <= static_cast<int>(std::floor(y1 * cells)) && j < cells; ++j) {
        const double l = std::min(y1, static_cast<double>(j + 1) / cells) - std::max(y0, static_cast<double>(j) / cells);
        if (l > 0.0) flows.push_back({j, i, l});
      }
    }
  }
  std::vector<double> p(static_cast<std::size_t>(cells), 1.0), q(static_cast<std::size_t>(cells));
  for (int it = 0; it < iterations; ++it) {
    std::fill(q.begin(), q.end(), 0.0);
    for (const Flow& fl : flows) q[static_cast<std::size_t>(fl.to)] += cells * fl.length * p[static_cast<std::size_t>(fl.from)];
    double mean = 0.0;
    for (double v : q) mean += v;
    mean /= cells;
    for (int i = 0; i < cells; ++i) p[static_cast<std::size_t>(i)] = q[static_cast<std::size_t>(i)] / mean;
  }
  return p;
}

// Bin densities of a random orbit: at each step one map is drawn uniformly.
inline std::vector<double> orbit_histogram(const std::vector<ruelle::ExpandingCircleMap>& maps, long steps,
                                           std::uint64_t seed, int bins) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<std::size_t> pick(0, maps.size() - 1);
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  double x = 0.3141592653589793;
  for (int burn = 0; burn < 1000; ++burn) x = maps[pick(g)](x);
  for (long s = 0; s < steps; ++s) {
    x = maps[pick(g)](x);
    ++counts[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(x * bins)))];
  }
  std::vector<double> d(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i) d[static_cast<std::size_t>(i)] = static_cast<double>(counts[static_cast<std::size_t>(i)]) * bins / steps;
  return d;
}

// int h(t) phi(A^n x + t lambda^n v_u) dt by the midpoint rule on `samples` points.
inline std::complex<double> pair_integral_midpoint(const ruelle::StandardPair& p, const ruelle::TrigObservable2D& phi,
                                                   const ruelle::ToralAutomorphism& t, int n, long samples) {
  const ruelle::Vec2 y0 = t.map_point(p.x, n);
  const double st = std::pow(t.lambda(), n);
  std::complex<double> acc = 0.0;
  const double dt = 2.0 * p.b / static_cast<double>(samples);
  for (long s = 0; s < samples; ++s) {
    const double tt = -p.b + (static_cast<double>(s) + 0.5) * dt;
    acc += p.density(tt) * phi.eval(y0[0] + tt * st * t.v_u()[0], y0[1] + tt * st * t.v_u()[1]) * dt;
  }
  return acc;
}

// Closed form for piecewise exp-linear densities against exponentials.
inline std::complex<double> pair_integral_exact(const ruelle::StandardPair& p, const ruelle::TrigObservable2D& phi,
                                                const ruelle::ToralAutomorphism& t, int n) {
  const ruelle::IntMatrix2 P = t.power(n);
  const long double x0 = p.x[0], x1 = p.x[1];
  const long double y0 = P.a11 * x0 + P.a12 * x1, y1 = P.a21 * x0 + P.a22 * x1;
  const long double st = std::pow(static_cast<long double>(t.lambda()), n);
  std::complex<double> total = 0.0;
  for (const auto& [k, c] : phi.coeffs()) {
    long double ph = k[0] * y0 + k[1] * y1;
    ph -= std::floor(ph);
    const double omega = static_cast<double>(kTwoPi * st * (k[0] * t.v_u()[0] + k[1] * t.v_u()[1]));
    const std::complex<double> phase = std::polar(1.0, static_cast<double>(kTwoPi * ph));
    for (std::size_t s = 0; s + 1 < p.nodes.size(); ++s) {
      const double t0 = p.nodes[s], t1 = p.nodes[s + 1];
      const double beta = (p.log_h[s + 1] - p.log_h[s]) / (t1 - t0);
      const std::complex<double> z(beta, omega);
      const double alpha = p.log_h[s] - beta * t0;
      std::complex<double> seg;
      if (std::abs(z) < 1e-14) seg = std::exp(alpha) * (t1 - t0);
      else seg = std::exp(alpha) * (std::exp(z * t1) - std::exp(z * t0)) / z;
      total += c * phase * seg;
    }
  }
  return phi.is_real() ? std::complex<double>(total.real(), 0.0) : total;
}

}  // namespace oracle

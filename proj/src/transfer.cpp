#include "ruelle/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ruelle/error.hpp"
#include "ruelle/fit.hpp"
#include "ruelle/quadrature.hpp"
#include "ruelle/rng.hpp"

namespace ruelle {

namespace {

void check_derivative_pair(const RealFn& h, const RealFn& h_prime) {
  const double step = 1e-5;
  for (int i = 0; i < 10; ++i) {
    const double x = 0.05 + 0.1 * i;
    const double fd = (h(x + step) - h(x - step)) / (2.0 * step);
    const double d = h_prime(x);
    if (std::abs(fd - d) > 1e-4 * (1.0 + std::abs(d)))
      throw std::invalid_argument("h_prime is inconsistent with h at x=" + std::to_string(x));
  }
}

double l1_over(const RealFn& f, std::vector<double> cuts, int order) {
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (cuts[k + 1] - cuts[k] <= 0.0) continue;
    total += l1_norm(f, cuts[k], cuts[k + 1], 1, order);
  }
  return total;
}

LYReport finish_report(const ExpandingCircleMap& map, LYReport r) {
  r.lambda_star = map.lambda_star();
  r.distortion = map.distortion();
  r.bound_rhs = r.w11_deriv_in / r.lambda_star + r.distortion * r.l1_in;
  r.mass_ok = r.l1_out <= r.l1_in * (1.0 + r.tol);
  r.deriv_ok = r.w11_deriv_out <= r.bound_rhs * (1.0 + r.tol);
  r.satisfied = r.mass_ok && r.deriv_ok;
  return r;
}

double derivative_identity(const ExpandingCircleMap& map, const RealFn& h, const RealFn& h_prime, double x) {
  double v = 0.0;
  for (const auto& p : inverse_branches(map, x)) {
    const double d1 = p.derivative;
    v += h_prime(p.y) / (d1 * d1) - h(p.y) * map.second_derivative(p.y) / (d1 * d1 * d1);
  }
  return v;
}

}  // namespace

double apply_transfer(const ExpandingCircleMap& map, const RealFn& h, double x) {
  double v = 0.0;
  for (const auto& p : inverse_branches(map, x)) v += h(p.y) / p.derivative;
  return v;
}

double transfer_derivative(const ExpandingCircleMap& map, const RealFn& h, const RealFn& h_prime, double x) {
  check_derivative_pair(h, h_prime);
  return derivative_identity(map, h, h_prime, x);
}

LYReport verify_ly(const ExpandingCircleMap& map, const TrigObservable& h, QuadratureOptions opts) {
  RealFn hv = [&](double y) { return h.value(y); };
  RealFn hd = [&](double y) { return h.derivative(y); };
  LYReport r;
  r.l1_in = l1_norm(hv, 0.0, 1.0, opts.cells, opts.order);
  r.w11_deriv_in = l1_norm(hd, 0.0, 1.0, opts.cells, opts.order);
  r.l1_out = l1_norm([&](double x) { return apply_transfer(map, hv, x); }, 0.0, 1.0, opts.cells, opts.order);
  r.w11_deriv_out =
      l1_norm([&](double x) { return derivative_identity(map, hv, hd, x); }, 0.0, 1.0, opts.cells, opts.order);
  return finish_report(map, r);
}

LYReport verify_ly(const ExpandingCircleMap& map, const std::vector<double>& g, QuadratureOptions opts) {
  const int m = static_cast<int>(g.size());
  if (m < 2) throw std::invalid_argument("verify_ly: grid function needs at least 2 samples");
  auto cell_of = [m](double y) {
    y -= std::floor(y);
    int i = static_cast<int>(y * m);
    return std::min(i, m - 1);
  };
  RealFn hv = [&, m](double y) {
    y -= std::floor(y);
    const int i = cell_of(y);
    const double t = y * m - i;
    return (1.0 - t) * g[i] + t * g[(i + 1) % m];
  };
  RealFn hd = [&, m](double y) {
    const int i = cell_of(y);
    return (g[(i + 1) % m] - g[i]) * m;
  };
  LYReport r;
  for (int i = 0; i < m; ++i) {
    const double a = g[i], b = g[(i + 1) % m];
    // Exact L1 of a linear piece over a cell of length 1/m.
    if (a * b >= 0.0) {
      r.l1_in += 0.5 * (std::abs(a) + std::abs(b)) / m;
    } else {
      r.l1_in += 0.5 * (a * a + b * b) / (std::abs(a) + std::abs(b)) / m;
    }
    r.w11_deriv_in += std::abs(b - a);
  }
  std::vector<double> cuts;
  for (int c = 0; c <= opts.cells; ++c) cuts.push_back(static_cast<double>(c) / opts.cells);
  for (int i = 0; i < m; ++i) cuts.push_back(map(static_cast<double>(i) / m));
  r.l1_out = l1_over([&](double x) { return apply_transfer(map, hv, x); }, cuts, opts.order);
  r.w11_deriv_out = l1_over([&](double x) { return derivative_identity(map, hv, hd, x); }, cuts, opts.order);
  return finish_report(map, r);
}

namespace {

// Breakpoints of the weighted integrand inside the bump support: the
// preimages f^{-k}(+-rho1), f^{-k}(+-rho2) for k < n that stay in the support.
std::vector<double> contracting_cuts(const ContractingCircleMap& cmap, int n) {
  const double r1 = cmap.bump().rho1(), r2 = cmap.bump().rho2();
  std::vector<double> cuts{-r2, r2};
  for (double target : {-r2, -r1, r1, r2}) {
    double x = target;
    for (int k = 0; k < std::max(n, 1); ++k) {
      if (std::abs(x) > r2) break;
      cuts.push_back(x);
      // Solve f(y) = x on the lift, y near x.
      double y = x;
      for (int it = 0; it < 100; ++it) {
        const double dy = (cmap.lift(y) - x) / cmap.derivative(y);
        y -= dy;
        if (std::abs(dy) < 1e-16) break;
      }
      x = y;
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

}  // namespace

double contracting_pushforward(const ContractingCircleMap& cmap, const RealFn& h, const RealFn& phi, int n,
                               QuadratureOptions opts) {
  if (n < 0) throw std::invalid_argument("contracting_pushforward: n must be >= 0");
  return contracting_sequence(cmap, h, phi, n, opts)[n];
}

std::vector<double> contracting_sequence(const ContractingCircleMap& cmap, const RealFn& h, const RealFn& phi,
                                         int n_max, QuadratureOptions opts) {
  if (n_max < 0) throw std::invalid_argument("contracting_sequence: n_max must be >= 0");
  std::vector<double> values(n_max + 1, 0.0);
  values[0] = integrate_composite([&](double x) { return h(x) * phi(x); }, -0.5, 0.5, 8 * opts.cells, opts.order);
  if (n_max == 0) return values;
  const GaussRule& rule = gauss_legendre(opts.order);
  const auto cuts = contracting_cuts(cmap, n_max);
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double a = cuts[p], b = cuts[p + 1];
    const double hc = (b - a) / opts.cells;
    for (int c = 0; c < opts.cells; ++c) {
      const double lo = a + c * hc;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double x = lo + 0.5 * hc * (1.0 + rule.nodes[q]);
        double weight = 0.5 * hc * rule.weights[q] * h(x);
        double y = x;
        for (int n = 1; n <= n_max; ++n) {
          weight *= cmap.bump()(y);
          if (weight == 0.0) break;
          y = cmap.lift(y);
          values[n] += weight * phi(y);
        }
      }
    }
  }
  return values;
}

DecayResult contracting_decay(const ContractingCircleMap& cmap, const RealFn& h, const TrigObservable& phi,
                              int n_max, QuadratureOptions opts) {
  if (n_max < 4) throw std::invalid_argument("contracting_decay: n_max must be >= 4");
  DecayResult r;
  RealFn pv = [&](double y) { return phi.value(y); };
  r.values = contracting_sequence(cmap, h, pv, n_max, opts);
  r.limit_mass = contracting_sequence(cmap, h, [](double) { return 1.0; }, n_max, opts)[n_max];
  r.phi_at_fixed_point = phi.value(0.0);
  const double target = r.limit_mass * r.phi_at_fixed_point;
  double scale = std::abs(target);
  for (double v : r.values) scale = std::max(scale, std::abs(v));
  const double floor = 1e-13 * std::max(1.0, scale);
  for (double v : r.values) r.residuals.push_back(std::abs(v - target));
  for (int n = 0; n <= n_max / 2; ++n) {
    if (r.residuals[n] <= floor) {
      std::ostringstream os;
      os << "residual " << r.residuals[n] << " at n=" << n << " is at the quadrature floor; reduce n_max";
      throw DegenerateFit(os.str());
    }
  }
  std::vector<double> xs, ys;
  r.fit_begin = n_max / 2;
  for (int n = r.fit_begin; n <= n_max; ++n) {
    if (r.residuals[n] <= floor) continue;
    xs.push_back(n);
    ys.push_back(std::log(r.residuals[n]));
    r.fit_end = n;
  }
  if (xs.size() < 2) throw DegenerateFit("fewer than two residuals above the quadrature floor in the fit window");
  const LineFit f = fit_line(xs, ys);
  r.rate = std::exp(f.slope);
  r.log_amplitude = f.intercept;
  return r;
}

ExpandingCircleMap random_expanding_map(std::uint64_t seed, std::uint64_t stream) {
  auto g = make_stream(seed, stream);
  const int degree = 2 + static_cast<int>(g() % 2);
  const int n_terms = 1 + static_cast<int>(g() % 3);
  const double budget = (degree - 1.05) * (0.2 + 0.7 * uniform01(g));
  std::vector<double> share(static_cast<std::size_t>(2 * n_terms));
  double total = 0.0;
  for (double& v : share) total += (v = 0.05 + uniform01(g));
  std::vector<TrigTerm> terms;
  for (int i = 0; i < n_terms; ++i) {
    const int j = i + 1;
    const double scale = budget / (total * 2.0 * 3.141592653589793 * j);
    const double sa = uniform01(g) < 0.5 ? -1.0 : 1.0, sb = uniform01(g) < 0.5 ? -1.0 : 1.0;
    terms.push_back({j, sa * share[static_cast<std::size_t>(2 * i)] * scale,
                     sb * share[static_cast<std::size_t>(2 * i + 1)] * scale});
  }
  return build_expanding_map(degree, terms);
}

TrigObservable random_trig_polynomial(std::uint64_t seed, std::uint64_t stream, int max_freq) {
  auto g = make_stream(seed, stream);
  const int K = 1 + static_cast<int>(g() % static_cast<std::uint64_t>(max_freq));
  TrigObservable h = TrigObservable::constant(2.0 * uniform01(g) - 1.0);
  for (int k = 1; k <= K; ++k)
    h = h + TrigObservable::cosine(k, (2.0 * uniform01(g) - 1.0) / k) + TrigObservable::sine(k, (2.0 * uniform01(g) - 1.0) / k);
  return h;
}

LYSuiteResult ly_property_suite(int n_maps, int n_polys, std::uint64_t seed, QuadratureOptions opts) {
  LYSuiteResult out;
  for (int m = 0; m < n_maps; ++m) {
    const ExpandingCircleMap map = random_expanding_map(seed, static_cast<std::uint64_t>(m));
    for (int p = 0; p < n_polys; ++p) {
      const TrigObservable h = random_trig_polynomial(seed, 1000000ULL + static_cast<std::uint64_t>(m * n_polys + p));
      const LYReport r = verify_ly(map, h, opts);
      ++out.checks;
      if (!r.satisfied) ++out.violations;
      out.worst_ratio = std::max(out.worst_ratio, (r.w11_deriv_out - r.bound_rhs) / r.bound_rhs);
      out.worst_ratio = std::max(out.worst_ratio, (r.l1_out - r.l1_in) / r.l1_in);
    }
  }
  return out;
}

}  // namespace ruelle

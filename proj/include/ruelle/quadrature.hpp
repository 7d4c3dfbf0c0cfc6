#pragma once

#include <functional>
#include <vector>

namespace ruelle {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Gauss-Legendre rule of the given order (cached, thread-safe).
const GaussRule& gauss_legendre(int order);

template <class F>
double integrate_interval(F&& f, double a, double b, const GaussRule& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) sum += rule.weights[q] * f(mid + half * rule.nodes[q]);
  return half * sum;
}

template <class F>
double integrate_composite(F&& f, double a, double b, int cells, int order) {
  const GaussRule& rule = gauss_legendre(order);
  const double h = (b - a) / cells;
  double sum = 0.0;
  for (int c = 0; c < cells; ++c) sum += integrate_interval(f, a + c * h, a + (c + 1) * h, rule);
  return sum;
}

// L1 norm of a smooth function on [a, b]; cells are split at sign changes
// (located by bisection on sampled values) so the integrand is smooth per piece.
double l1_norm(const std::function<double(double)>& f, double a, double b, int cells, int order);

}  // namespace ruelle

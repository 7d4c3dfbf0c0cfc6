#include "ruelle/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace ruelle {

namespace {

GaussRule make_rule(int order) {
  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[order - 1 - i] = x;
    rule.weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
  if (order < 1 || order > 128) throw std::invalid_argument("gauss_legendre: order out of range");
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, make_rule(order)).first;
  return it->second;
}

double l1_norm(const std::function<double(double)>& f, double a, double b, int cells, int order) {
  const GaussRule& rule = gauss_legendre(order);
  const double h = (b - a) / cells;
  auto abs_f = [&](double x) { return std::abs(f(x)); };
  double total = 0.0;
  double left = a;
  double f_left = f(a);
  for (int c = 0; c < cells; ++c) {
    const double right = (c + 1 == cells) ? b : a + (c + 1) * h;
    // Sample the cell at the rule's nodes to detect sign changes.
    std::vector<double> xs{left};
    std::vector<double> fs{f_left};
    for (double t : rule.nodes) {
      const double x = 0.5 * (left + right) + 0.5 * (right - left) * t;
      xs.push_back(x);
      fs.push_back(f(x));
    }
    const double f_right = f(right);
    xs.push_back(right);
    fs.push_back(f_right);
    std::vector<double> cuts{left};
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      if (fs[k] * fs[k + 1] < 0.0) {
        double lo = xs[k], hi = xs[k + 1], flo = fs[k];
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = f(mid);
          if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        cuts.push_back(0.5 * (lo + hi));
      }
    }
    cuts.push_back(right);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) total += integrate_interval(abs_f, cuts[k], cuts[k + 1], rule);
    left = right;
    f_left = f_right;
  }
  return total;
}

}  // namespace ruelle

#pragma once

#include <cmath>
#include <vector>

#include "ruelle/maps.hpp"
#include "ruelle/quadrature.hpp"

namespace ruelle::detail {

inline int wrap_index(long long i, int n) {
  long long r = i % n;
  return static_cast<int>(r < 0 ? r + n : r);
}

// Cut [a, b] where n F(x) crosses an integer, so floor(n F) is constant per piece.
inline void split_at_crossings(const ExpandingCircleMap& map, int n, double a, double b, std::vector<double>& cuts) {
  cuts.clear();
  cuts.push_back(a);
  const double ub = n * map.lift(b);
  double lo = a;
  for (double m = std::floor(n * map.lift(a)) + 1.0; m < ub; m += 1.0) {
    double l = lo, h = b;
    double x = l + (h - l) * 0.5;
    for (int it = 0; it < 100; ++it) {
      const double g = n * map.lift(x) - m;
      if (g < 0.0) l = x; else h = x;
      double next = x - g / (n * map.derivative(x));
      if (!(next > l && next < h)) next = 0.5 * (l + h);
      if (std::abs(next - x) < 1e-17 || h - l < 1e-17) {
        x = next;
        break;
      }
      x = next;
    }
    cuts.push_back(x);
    lo = x;
  }
  cuts.push_back(b);
}

// Calls visit(x, w, row, t) for every quadrature node of [a, b]: the node x,
// its weight w, the lower hat index row = floor(n F(x)) mod n and the
// fractional part t, so hat_row(f x) = 1 - t and hat_{row+1}(f x) = t.
template <class Visit>
void for_each_node(const ExpandingCircleMap& map, int n, double a, double b, const GaussRule& rule,
                   std::vector<double>& cuts, Visit&& visit) {
  split_at_crossings(map, n, a, b, cuts);
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double lo = cuts[p], hi = cuts[p + 1];
    if (hi <= lo) continue;
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    const double base = std::floor(n * map.lift(mid));
    const int row = wrap_index(static_cast<long long>(base), n);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double x = mid + half * rule.nodes[q];
      double t = n * map.lift(x) - base;
      t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
      visit(x, half * rule.weights[q], row, t);
    }
  }
}

// Column j of the weighted matrix, accumulated into col[0..n).
template <class S, class Weight>
void gather_column(const ExpandingCircleMap& map, int n, int j, const GaussRule& rule, Weight&& weight, S* col,
                   std::vector<double>& cuts) {
  for (int half = 0; half < 2; ++half) {
    const double a = static_cast<double>(j - 1 + half) / n;
    const double b = static_cast<double>(j + half) / n;
    for_each_node(map, n, a, b, rule, cuts, [&](double x, double w, int row, double t) {
      const S v = static_cast<double>(n) * w * (1.0 - std::abs(n * x - j)) * weight(x);
      col[row] += v * (1.0 - t);
      col[(row + 1) % n] += v * t;
    });
  }
}

}  // namespace ruelle::detail

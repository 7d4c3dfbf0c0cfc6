#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ruelle/maps.hpp"

namespace ruelle {

using RealFn = std::function<double(double)>;

struct QuadratureOptions {
  int cells = 512;
  int order = 8;
};

// Lh(x) = sum over f(y) = x of h(y) / f'(y).
double apply_transfer(const ExpandingCircleMap& map, const RealFn& h, double x);

// (Lh)'(x) = L(h'/f')(x) - L(h f''/f'^2)(x). Throws std::invalid_argument if
// h_prime disagrees with a finite difference of h.
double transfer_derivative(const ExpandingCircleMap& map, const RealFn& h, const RealFn& h_prime, double x);

struct LYReport {
  double l1_in = 0.0;
  double l1_out = 0.0;
  double w11_deriv_in = 0.0;
  double w11_deriv_out = 0.0;
  double bound_rhs = 0.0;  // ||h'||_1 / lambda_star + D ||h||_1
  double lambda_star = 0.0;
  double distortion = 0.0;
  double tol = 1e-8;
  bool mass_ok = false;
  bool deriv_ok = false;
  bool satisfied = false;
};

LYReport verify_ly(const ExpandingCircleMap& map, const TrigObservable& h, QuadratureOptions opts = {});

// h given by samples on the uniform periodic grid i/m, interpolated linearly.
LYReport verify_ly(const ExpandingCircleMap& map, const std::vector<double>& grid_values, QuadratureOptions opts = {});

// int phi L^n h = int h prod_{k<n} psi(f^k x) phi(f^n x) dx.
double contracting_pushforward(const ContractingCircleMap& cmap, const RealFn& h, const RealFn& phi, int n,
                               QuadratureOptions opts = {64, 8});

// Values for n = 0..n_max in a single forward sweep.
std::vector<double> contracting_sequence(const ContractingCircleMap& cmap, const RealFn& h, const RealFn& phi,
                                         int n_max, QuadratureOptions opts = {64, 8});

struct DecayResult {
  std::vector<double> values;     // int phi L^n h, n = 0..n_max
  std::vector<double> residuals;  // |values[n] - c phi(0)|
  double limit_mass = 0.0;        // c = int L^{n_max} h
  double phi_at_fixed_point = 0.0;
  double rate = 0.0;              // exp of the fitted log-residual slope
  double log_amplitude = 0.0;
  int fit_begin = 0;
  int fit_end = 0;
};

// Throws DegenerateFit if a residual reaches the quadrature floor at n <= n_max/2.
DecayResult contracting_decay(const ContractingCircleMap& cmap, const RealFn& h, const TrigObservable& phi,
                              int n_max, QuadratureOptions opts = {64, 8});

struct LYSuiteResult {
  int checks = 0;
  int violations = 0;
  double worst_ratio = 0.0;  // max (lhs - rhs) / rhs
};

// Random valid maps x random trig polynomials, seeded per (map, poly) stream.
ExpandingCircleMap random_expanding_map(std::uint64_t seed, std::uint64_t stream);
TrigObservable random_trig_polynomial(std::uint64_t seed, std::uint64_t stream, int max_freq = 8);
LYSuiteResult ly_property_suite(int n_maps, int n_polys, std::uint64_t seed, QuadratureOptions opts = {});

}  // namespace ruelle

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "ruelle/maps.hpp"
#include "ruelle/spectral.hpp"

namespace ruelle {

struct TripleNormEstimate {
  double lower = 0.0;  // max over candidate vectors (the reported value)
  double upper = 0.0;  // ||M0 - M1||_{1 -> 1}
};

// Discrete strong norm ||c||_1 + ||Delta c||_1 of hat coefficients.
double strong_norm(const Eigen::VectorXd& c);
double weak_norm(const Eigen::VectorXd& c);

TripleNormEstimate triple_norm_distance(const TransferMatrix& m0, const TransferMatrix& m1);
TripleNormEstimate triple_norm_distance(const ExpandingCircleMap& map0, const ExpandingCircleMap& map1, int n);

struct StabilityRow {
  double epsilon = 0.0;
  double triple_norm = 0.0;
  double triple_norm_upper = 0.0;
  double lambda2_drift = 0.0;
  double density_drift = 0.0;
  double density_drift_coarse = 0.0;  // same at n/2
  double leading = 1.0;
  int n = 0;
};

struct StabilityTable {
  std::vector<StabilityRow> rows;
  double fitted_D = 0.0;         // triple_norm ~ D eps
  double fitted_exponent = 0.0;  // density_drift ~ C eps^a
};

// Perturbation family f_eps = map0 + eps sin(2 pi x). Rows are parallel over eps.
StabilityTable deterministic_stability(const ExpandingCircleMap& map0, const std::vector<double>& eps_list, int n,
                                       int m_eigs = 4);

struct AveragedLY {
  double mean_inv_lambda = 0.0;
  double mean_B = 0.0;
  double max_inv_lambda = 0.0;
  double max_B = 0.0;
};

struct StochasticOperator {
  TransferMatrix matrix;
  AveragedLY ly;
};

StochasticOperator stochastic_operator(const std::vector<ExpandingCircleMap>& maps, const std::vector<double>& weights,
                                       int n);

// Noise family f_w = map0 + w sin(2 pi x), w uniform on [-amp, amp] at
// n_random midpoint atoms.
std::vector<ExpandingCircleMap> noise_family(const ExpandingCircleMap& map0, double amplitude, int n_random);

struct StochasticStabilityRow {
  StabilityRow row;
  AveragedLY ly;
};

std::vector<StochasticStabilityRow> stochastic_stability(const ExpandingCircleMap& map0,
                                                         const std::vector<double>& amplitudes, int n_random, int n);

// L1 distance of two hat densities, (1/n)-weighted piecewise-linear exact-enough quadrature.
double density_l1_distance(const HatCoefficients& a, const HatCoefficients& b);

}  // namespace ruelle

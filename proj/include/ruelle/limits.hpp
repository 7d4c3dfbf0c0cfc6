#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "ruelle/maps.hpp"
#include "ruelle/spectral.hpp"

namespace ruelle {

// Galerkin: K(nu) = T^{-1} M(nu), the L2-orthogonal projection onto the hat
// space. Averaging: K(nu) = M(nu) = P_n L_nu.
enum class Scheme { Galerkin, Averaging };

// Discretized twisted family for one (map, observable, n): invariant density,
// mean of the observable and the centred observable.
class CltModel {
 public:
  CltModel(const ExpandingCircleMap& map, const TrigObservable& obs, int n, Scheme scheme = Scheme::Galerkin,
           int quad_order = 6);

  const ExpandingCircleMap& map() const { return map_; }
  int n() const { return n_; }
  Scheme scheme() const { return scheme_; }
  int quad_order() const { return quad_order_; }
  const TransferMatrix& matrix() const { return matrix_; }
  const HatCoefficients& density() const { return density_; }
  double mean() const { return mean_; }
  double centered(double x) const { return centered_obs_.value(x) - shift_; }
  const TrigObservable& observable() const { return obs_; }

  Eigen::MatrixXcd twisted(double nu) const;        // M(nu)
  Eigen::MatrixXcd step_operator(double nu) const;  // K(nu)
  Eigen::MatrixXcd derivative_operator() const;     // dK/dnu at 0
  Eigen::VectorXcd start_vector() const;
  std::complex<double> integral(const Eigen::VectorXcd& v) const { return v.sum() / static_cast<double>(n_); }
  // Vector b with int phi_hat u = b^T (hat moments of u).
  Eigen::VectorXd pairing_vector() const;

 private:
  ExpandingCircleMap map_;
  TrigObservable obs_;
  TrigObservable centered_obs_;
  int n_;
  Scheme scheme_;
  int quad_order_;
  TransferMatrix matrix_;
  HatCoefficients density_;
  double mean_ = 0.0;
  double shift_ = 0.0;  // mean minus the Lebesgue mean of obs
};

struct TwistedTransferMatrix {
  int n = 0;
  double nu = 0.0;
  std::string map_id;
  Eigen::MatrixXcd entries;
};

TwistedTransferMatrix twisted_matrix(const ExpandingCircleMap& map, const TrigObservable& obs, double nu, int n,
                                     int quad_order = 6);

struct VarianceResult {
  double sigma2 = 0.0;
  double raw_sigma2 = 0.0;
  std::vector<double> terms;  // C_0, C_1, ...
  int truncated_at = 0;
  double mean = 0.0;
  bool is_coboundary = false;
};

struct GreenKuboOptions {
  int n_grid = 512;
  int l_max = 200;
  double tail_tol = 1e-12;
  double coboundary_threshold = 1e-8;
  Scheme scheme = Scheme::Galerkin;
};

// Throws SlowDecay if the series is not truncated by l_max.
VarianceResult green_kubo_variance(const ExpandingCircleMap& map, const TrigObservable& obs,
                                   const GreenKuboOptions& opts = {});
VarianceResult green_kubo_variance(const CltModel& model, const GreenKuboOptions& opts = {});

// Correlations C_0..C_{count-1} of phi_hat.
std::vector<double> correlation_terms(const CltModel& model, int count);

struct LeadingEigen {
  std::complex<double> eigenvalue;
  Eigen::VectorXcd vector;
  int iterations = 0;
};

// Complex power iteration with Rayleigh quotient. Throws NoConvergence.
LeadingEigen twisted_leading_eigen(const Eigen::MatrixXcd& k, const Eigen::VectorXcd& start, int max_iterations = 20000);

struct LambdaCurve {
  std::vector<double> nu;
  std::vector<std::complex<double>> lambda;
  double quad_coefficient = 0.0;    // q in lambda ~ 1 + q nu^2
  double linear_coefficient = 0.0;  // |fitted linear coefficient|
  int fit_points = 0;
};

LambdaCurve lambda_nu_curve(const CltModel& model, const std::vector<double>& nu_list, double fit_window = 0.1);

std::complex<double> characteristic_function(const CltModel& model, double lambda, int n_steps);

struct LocalCltOptions {
  double dlambda = 0.05;
  double tail_tol = 1e-6;
  double nu_max = 3.0;  // Lambda <= nu_max sqrt(n_steps)
};

struct LocalCltResult {
  std::vector<double> y;
  std::vector<double> density;
  std::vector<double> gaussian;
  double lambda_cut = 0.0;
  double sigma2 = 0.0;
  std::vector<std::string> warnings;  // TruncationWarning
  std::vector<double> lambda_grid;
  std::vector<std::complex<double>> char_values;
};

// C-infinity bump kernel on [-1, 1] (unit mass) and its Fourier transform.
double smoothing_kernel(double z);
double smoothing_kernel_hat(double omega);

LocalCltResult local_clt_density(const CltModel& model, const std::vector<double>& y_list, int n_steps,
                                 double epsilon, double sigma2, const LocalCltOptions& opts = {});

struct EmpiricalClt {
  double ks_distance = 0.0;
  double sigma = 0.0;
  std::vector<double> samples;  // Psi_n per sample, sample order
  std::vector<double> bin_edges;
  std::vector<long> bin_counts;
  bool exact_digits = false;
};

// Initial points uniform; linear maps x -> d x are simulated exactly with a
// base-d digit window, others by floating-point orbits. Parallel over samples
// with one RNG stream per sample index.
EmpiricalClt empirical_clt(const CltModel& model, int n_steps, int n_samples, std::uint64_t seed, double sigma2,
                           int bins = 40);

namespace reference {
EmpiricalClt empirical_clt(const CltModel& model, int n_steps, int n_samples, std::uint64_t seed, double sigma2,
                           int bins = 40);
}  // namespace reference

// Kolmogorov-Smirnov distance of samples to N(0, sigma^2) (step at 0 if sigma = 0).
double ks_to_normal(std::vector<double> samples, double sigma);

struct VarianceGrowth {
  std::vector<int> n;
  std::vector<double> values;  // ||sum_{k<n} phi_hat o f^k||^2 / n
  double sigma2 = 0.0;
  double max_deviation = 0.0;
};

VarianceGrowth variance_growth_check(const CltModel& model, const std::vector<int>& n_list, double sigma2);

struct RadiusScan {
  std::vector<double> nu;
  std::vector<double> radius;
  double min_radius = 0.0;
  double max_radius = 0.0;
};

RadiusScan spectral_radius_scan(const CltModel& model, const std::vector<double>& nu_grid);

struct ProjectorCheck {
  double residual = 0.0;          // ||Pi'_fd - series||
  double block_identity = 0.0;    // ||Pi Pi' Pi||
  double derivative_norm = 0.0;   // ||Pi'_fd||
  double tail_norm = 0.0;
};

// Throws SlowDecay if ||K_0^k (I - Pi)|| is not below tail_tol at k_max.
ProjectorCheck projector_derivative_check(const CltModel& model, double h_step, int k_max, double tail_tol = 1e-10);

}  // namespace ruelle

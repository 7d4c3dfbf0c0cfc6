#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "ruelle/maps.hpp"
#include "ruelle/transfer.hpp"

namespace ruelle {

inline double hat(double u) {
  const double a = 1.0 - std::abs(u);
  return a > 0.0 ? a : 0.0;
}

// Coefficients of sum_i c_i hat(n x - i), periodic index.
struct HatCoefficients {
  int n = 0;
  std::vector<double> c;

  double integral() const;
  double operator()(double x) const;
  Eigen::VectorXd vector() const { return Eigen::Map<const Eigen::VectorXd>(c.data(), n); }
  static HatCoefficients from_vector(const Eigen::VectorXd& v);
};

// c_i = n * int hat(n y - i) h(y) dy.
HatCoefficients project(const RealFn& h, int n, int order = 8, int subcells = 4);

struct TransferMatrix {
  int n = 0;
  Eigen::MatrixXd entries;  // M_ij = n int hat(n f(x) - i) hat(n x - j) dx
  std::string map_id;
  int quad_order = 6;
  double max_column_defect = 0.0;
  std::vector<std::string> warnings;
};

// Column-parallel (OpenMP) assembly. Emits a QuadratureWarning entry when a
// column sum deviates from 1 by more than 1e-10.
TransferMatrix assemble_transfer_matrix(const ExpandingCircleMap& map, int n, int quad_order = 6);

namespace reference {
// Serial cell-by-cell scatter assembly, kept as an independent check of the
// parallel kernel.
TransferMatrix assemble_transfer_matrix(const ExpandingCircleMap& map, int n, int quad_order = 6);
}  // namespace reference

// M_ij(w) = n int hat(n f(x) - i) w(x) hat(n x - j) dx for a complex weight.
Eigen::MatrixXcd assemble_weighted_matrix(const ExpandingCircleMap& map, int n, int quad_order,
                                          const std::function<std::complex<double>(double)>& weight);

// m_i = n int hat(n f(x) - i) g(x) dx, the hat moments of L g.
Eigen::VectorXd transfer_moments(const ExpandingCircleMap& map, const RealFn& g, int n, int order = 8,
                                 int subcells = 4);

// Periodic mass operator T = n G = tridiag(1/6, 2/3, 1/6): T c = project(reconstruct(c)).
Eigen::VectorXd mass_apply(const Eigen::VectorXd& c);
Eigen::VectorXd mass_solve(const Eigen::VectorXd& rhs);
Eigen::VectorXcd mass_solve(const Eigen::VectorXcd& rhs);
Eigen::MatrixXcd mass_solve(const Eigen::MatrixXcd& rhs);
Eigen::MatrixXd mass_solve(const Eigen::MatrixXd& rhs);

struct LeadingMode {
  double eigenvalue = 0.0;
  HatCoefficients density;
  int iterations = 0;
  double min_entry_before_clamp = 0.0;
};

// Power iteration from the uniform vector. Throws NoConvergence.
LeadingMode leading_mode(const TransferMatrix& m, int max_iterations = 100000);

// Top m eigenvalues by modulus (dense nonsymmetric solve).
std::vector<std::complex<double>> top_spectrum(const TransferMatrix& m, int count);

struct SpectralReport {
  double leading = 0.0;
  HatCoefficients density;
  std::vector<std::complex<double>> spectrum;
  double gap = 0.0;
  double essential_bound = 0.0;
};

SpectralReport spectral_report(const ExpandingCircleMap& map, int n, int count);

struct ProjectionError {
  double measured = 0.0;
  double bound = 0.0;
};

ProjectionError projection_error_check(const TrigObservable& h, int n);

}  // namespace ruelle

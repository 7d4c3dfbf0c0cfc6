#pragma once

#include <array>
#include <complex>
#include <map>
#include <string>
#include <vector>

namespace ruelle {

// a * sin(2 pi j x) + b * cos(2 pi j x)
struct TrigTerm {
  int j = 1;
  double a = 0.0;
  double b = 0.0;
};

// f(x) = d x + sum_j [a_j sin(2 pi j x) + b_j cos(2 pi j x)] on the circle.
class ExpandingCircleMap {
 public:
  // Throws NonExpanding unless d - sum 2 pi j (|a_j| + |b_j|) > 1.
  ExpandingCircleMap(int degree, std::vector<TrigTerm> terms);

  int degree() const { return degree_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }
  double lambda_star() const { return lambda_star_; }
  double distortion() const { return distortion_; }
  double analytic_bound() const { return analytic_bound_; }

  double lift(double x) const;
  double operator()(double x) const;  // in [0, 1)
  double derivative(double x) const;
  double second_derivative(double x) const;

  // Same map with (da, db) added to the frequency-j amplitudes.
  ExpandingCircleMap perturbed(int j, double da, double db) const;

  std::string id() const;

 private:
  int degree_;
  std::vector<TrigTerm> terms_;
  double analytic_bound_ = 0.0;
  double lambda_star_ = 0.0;
  double distortion_ = 0.0;
};

ExpandingCircleMap build_expanding_map(int degree, std::vector<TrigTerm> terms);
ExpandingCircleMap doubling_map();

struct Preimage {
  double y;
  double derivative;
};

// The d preimages of x, ordered by y in [0, 1). Throws ConvergenceFailure.
std::vector<Preimage> inverse_branches(const ExpandingCircleMap& map, double x);

// Circle distance of x to 0.
double circle_distance(double x);

// C^2 bump: 1 on [-rho1, rho1], 0 outside [-rho2, rho2], smoothstep-5 shoulder.
class Bump {
 public:
  Bump(double rho1, double rho2);
  double operator()(double x) const;
  double rho1() const { return rho1_; }
  double rho2() const { return rho2_; }

 private:
  double rho1_, rho2_;
};

// f(x) = x - kappa sin(2 pi x) with the bump weight psi.
class ContractingCircleMap {
 public:
  static constexpr double kDefaultRho1 = 0.1;
  static constexpr double kDefaultRho2 = 0.2;
  static double default_kappa();

  // Throws InvalidContractingMap if kappa is outside (0, 1/(2 pi)) or
  // sup |psi f'| >= 1.
  ContractingCircleMap(double kappa, double rho1 = kDefaultRho1, double rho2 = kDefaultRho2);

  double kappa() const { return kappa_; }
  const Bump& bump() const { return bump_; }
  double contraction_bound() const { return contraction_bound_; }

  double lift(double x) const;
  double derivative(double x) const;

 private:
  double kappa_;
  Bump bump_;
  double contraction_bound_ = 0.0;
};

// Finite Fourier series sum_k c_k exp(2 pi i k x) on the circle.
class TrigObservable {
 public:
  TrigObservable() = default;
  // Throws std::invalid_argument if `real` is set and c_{-k} != conj(c_k).
  TrigObservable(std::map<int, std::complex<double>> coeffs, bool real);

  static TrigObservable constant(double c);
  static TrigObservable cosine(int k, double amplitude = 1.0);
  static TrigObservable sine(int k, double amplitude = 1.0);

  std::complex<double> eval(double x) const;  // real part only when real
  double value(double x) const { return eval(x).real(); }
  double derivative(double x) const;
  std::complex<double> coeff(int k) const;
  const std::map<int, std::complex<double>>& coeffs() const { return coeffs_; }
  bool is_real() const { return real_; }
  int max_freq() const;
  // Zero-mean copy (mean coefficient dropped).
  TrigObservable centered() const;

  TrigObservable operator+(const TrigObservable& other) const;
  TrigObservable operator*(double s) const;

 private:
  std::map<int, std::complex<double>> coeffs_;
  bool real_ = true;
};

using Lattice = std::array<long long, 2>;

// Finite Fourier series on the torus T^2.
class TrigObservable2D {
 public:
  TrigObservable2D() = default;
  TrigObservable2D(std::map<Lattice, std::complex<double>> coeffs, bool real);

  static TrigObservable2D cosine(Lattice k, double amplitude = 1.0);

  std::complex<double> eval(double y1, double y2) const;
  std::array<std::complex<double>, 2> gradient(double y1, double y2) const;
  std::complex<double> coeff(const Lattice& k) const;
  const std::map<Lattice, std::complex<double>>& coeffs() const { return coeffs_; }
  bool is_real() const { return real_; }

 private:
  std::map<Lattice, std::complex<double>> coeffs_;
  bool real_ = true;
};

}  // namespace ruelle

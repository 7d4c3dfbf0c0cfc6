#pragma once

#include <array>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ruelle/maps.hpp"

namespace ruelle {

using Vec2 = std::array<double, 2>;

struct IntMatrix2 {
  long long a11 = 1, a12 = 0, a21 = 0, a22 = 1;

  Lattice apply(const Lattice& k) const { return {a11 * k[0] + a12 * k[1], a21 * k[0] + a22 * k[1]}; }
  long long det() const { return a11 * a22 - a12 * a21; }
  long long trace() const { return a11 + a22; }
  // Throws Overflow if an entry leaves the 64-bit range.
  IntMatrix2 operator*(const IntMatrix2& o) const;
};

class ToralAutomorphism {
 public:
  const IntMatrix2& matrix() const { return a_; }
  const IntMatrix2& inverse() const { return inv_; }
  double lambda() const { return lambda_; }
  const Vec2& v_u() const { return vu_; }
  const Vec2& v_s() const { return vs_; }

  IntMatrix2 power(int n) const;  // A^n for n >= 0, A^{-|n|} for n < 0
  // A^n k with saturation: nullopt once the orbit has provably left every
  // box of radius `escape` and cannot return.
  std::optional<Lattice> iterate(const Lattice& k, int n, long long escape = 1LL << 40) const;
  // A^n x mod 1.
  Vec2 map_point(const Vec2& x, int n) const;

  double u_coord(const Vec2& v) const { return v[0] * vu_[0] + v[1] * vu_[1]; }
  double s_coord(const Vec2& v) const { return v[0] * vs_[0] + v[1] * vs_[1]; }

 private:
  friend ToralAutomorphism toral_eigen(const IntMatrix2& a);
  IntMatrix2 a_, inv_;
  double lambda_ = 0.0;
  Vec2 vu_{}, vs_{};
};

// Throws NotHyperbolic if trace <= 2, NotSymmetric if A is not symmetric with
// positive entries and determinant 1.
ToralAutomorphism toral_eigen(const IntMatrix2& a);
ToralAutomorphism cat_map();

// Fourier coefficients c_k of h = sum_k c_k exp(2 pi i <k, x>), ||k||_inf <= K.
struct FourierField2D {
  int K = 0;
  std::map<Lattice, std::complex<double>> coeffs;
  bool real = true;

  std::complex<double> at(const Lattice& k) const;
  double energy() const;  // sum |c_k|^2
  static FourierField2D from_observable(const TrigObservable2D& obs, int K);
  // c_k = (1 + ||k||_2)^{-r-2}
  static FourierField2D smooth_profile(int K, double r);
};

struct FourierPush {
  FourierField2D field;
  long dropped_count = 0;
  double dropped_energy = 0.0;
};

// (L^n h)_k = h_{A^n k}; coefficients whose index leaves the box are counted, never aliased.
FourierPush fourier_pushforward(const FourierField2D& field, const ToralAutomorphism& t, int n);

// C_n = int phi (h o A^{-n}) - int phi int h, n = 0..n_max, exact.
std::vector<std::complex<double>> correlation_sequence(const FourierField2D& phi, const FourierField2D& h,
                                                       const ToralAutomorphism& t, int n_max);

// Smallest n0 with C_n = 0 for all n >= n0, from the orbits of supp(phi) \ {0}.
int correlation_vanishing_time(const FourierField2D& phi, const FourierField2D& h, const ToralAutomorphism& t);

struct AnisotropicWeightParams {
  double p = 1.0;
  double cone_u = 0.7853981633974483;  // half-angle of I_+ around v_u (|tan| <= 1)
  double cone_s = 0.19739555984988078; // half-angle of I_- around v_s (|tan| >= 5)
  double K_cut = 4.0;
};

// alpha: +1 on A(I_+), -1 on A^{-1}(I_-), cosine ramp in s = log|tan psi|
// (psi the angle to v_u) in between.
class AnisotropicWeight {
 public:
  // Throws ConeViolation if the cones overlap, if invariance fails on the
  // angular grid, or if the cone estimate nu^2 is not < 1.
  AnisotropicWeight(const ToralAutomorphism& t, const AnisotropicWeightParams& params);

  double alpha(double ku, double ks) const;  // components along v_u, v_s
  double alpha(const Lattice& k) const;
  double bracket(const Lattice& k) const;   // 1 + ||k||^2
  double weight(const Lattice& k) const;    // bracket^{p alpha}
  double log_weight(const Lattice& k) const;

  const AnisotropicWeightParams& params() const { return params_; }
  double t_plus() const { return t_plus_; }
  double t_minus() const { return t_minus_; }
  double gamma() const { return gamma_; }
  double nu2() const { return nu2_; }
  double B() const { return b_; }
  double L() const { return l_; }
  // Largest |d alpha / d psi| over the projective circle.
  double lipschitz() const;

 private:
  const ToralAutomorphism* t_;
  AnisotropicWeightParams params_;
  double t_plus_ = 1.0, t_minus_ = 5.0;
  double s_a_ = 0.0, s_b_ = 0.0;
  double gamma_ = 0.0, nu2_ = 0.0, b_ = 0.0, l_ = 0.0;
};

double anisotropic_weight(const AnisotropicWeight& w, const Lattice& k);

struct RatioRow {
  Lattice k;
  double ratio;
  bool in_gamma;
};

struct LYRatioScan {
  double max_ratio_outside_gamma = 0.0;
  Lattice argmax{0, 0};
  std::vector<Lattice> gamma_set;
  double nu_estimate = 0.0;  // nu
  double target = 0.0;       // nu^{2p}
  double L = 0.0;
  double B = 0.0;
  double gamma = 0.0;
  long scanned = 0;
  long transition_points = 0;
  long transition_violations = 0;  // ratio > B <k>^{-gamma} outside the cones
  double transition_worst = 0.0;   // max ratio / (B <k>^{-gamma})
  std::vector<RatioRow> rows;
};

LYRatioScan ly_ratio_scan(const ToralAutomorphism& t, const AnisotropicWeightParams& params, int K,
                          bool keep_rows = false);

// Standard pairs.

struct StandardPair {
  double b = 0.5;
  Vec2 x{0.0, 0.0};
  std::vector<double> nodes;  // increasing, nodes.front() = -b, nodes.back() = b
  std::vector<double> log_h;  // normalized log-density at nodes, linear in between
  double a = 1.0;

  double log_density(double t) const;
  double density(double t) const { return std::exp(log_density(t)); }
  double lipschitz() const;  // max |slope| of log_h
  // int_{lo}^{hi} h (exact for the piecewise-linear log-density).
  double mass(double lo, double hi) const;
};

struct StandardFamily {
  std::vector<StandardPair> pairs;
  std::vector<double> masses;
};

// log_h sampled on the uniform grid over [-b, b]. Throws RegularityViolation.
StandardPair make_standard_pair(double b, const Vec2& x, const std::vector<double>& log_h, double a);
StandardPair make_standard_pair_on_nodes(double b, const Vec2& x, const std::vector<double>& nodes,
                                         const std::vector<double>& log_h, double a);
StandardPair uniform_pair(double b, const Vec2& x, double a);

struct PairQuadratureInfo {
  long cells = 0;
  bool capped = false;  // QuadratureWarning
};

// f_*^n mu(phi) = int h(t) phi(A^n x + t lambda^n v_u) dt.
std::complex<double> pair_expectation(const StandardPair& pair, const TrigObservable2D& phi,
                                      const ToralAutomorphism& t, int n, PairQuadratureInfo* info = nullptr);

// Subdivision lambda^n b = 2 K delta into 2K pieces, delta in [1/2, 1]. delta <= 0 picks
// K = ceil(lambda^n b / 2); otherwise K is the integer nearest lambda^n b / (2 delta).
// Throws TooShort if lambda^n b < 1.
StandardFamily push_standard_pair(const StandardPair& pair, const ToralAutomorphism& t, int n, double delta = 0.0);

// Push with one piece of half-length delta centred at stretched coordinate
// tau; the remainders are subdivided uniformly. Returns the family and the
// index of that piece.
std::pair<StandardFamily, int> push_with_piece(const StandardPair& pair, const ToralAutomorphism& t, int n,
                                               double tau, double delta);

// Decompose x2 - x1 = s v_s + e v_u modulo Z^2 with s in [s_lo, s_hi] and
// minimal |e|. Returns nullopt if no translate gives s in range.
std::optional<std::pair<double, double>> separation(const ToralAutomorphism& t, const Vec2& x1, const Vec2& x2,
                                                    double s_lo = 1.0, double s_hi = 2.0);

struct MatchingCheck {
  double measured = 0.0;
  double bound = 0.0;             // s ||d_s phi|| lambda^{-n}
  double kantorovich_bound = 0.0; // 2 b e^{a b} lambda^{-n}
  double coupling_cost = 0.0;     // s lambda^{-n}
};

// Throws NotMatching unless pair2 is pair1 translated by s v_s.
MatchingCheck matching_bound_check(const StandardPair& pair1, const StandardPair& pair2, double s,
                                   const TrigObservable2D& phi, const ToralAutomorphism& t, int n);

// sup |d phi / d s| bound: sum_k |c_k| 2 pi |<k, v_s>|.
double stable_derivative_bound(const TrigObservable2D& phi, const ToralAutomorphism& t);

struct CouplingParams {
  double a = 1.0;            // class constant the residuals must satisfy
  double c = -1.0;           // coupling constant; < 0 means c_max / 2
  double mass1 = 1.0;        // p~_{0,1}
  double mass2 = 1.0;        // p~_{0,2}
  double matching_tol = 1e-3;
  int residual_refine = 64;  // log-density samples per node interval of the residual
};

struct CouplingResult {
  double a_eff = 0.0;  // lambda^{-n0} a of the incoming pairs
  double c = 0.0;
  double c_max = 0.0;  // e^{-2 a_eff}
  double gamma = 0.0;  // c / (2 e^{-2 a_eff} - c)
  double p_star = 0.0;
  double coupled_mass = 0.0;  // c p*
  double s = 0.0, e = 0.0;
  StandardPair matched1, matched2;
  StandardPair residual1, residual2;
  double residual_mass1 = 0.0, residual_mass2 = 0.0;  // p~_i - c p*
  double p0_1 = 0.0, p0_2 = 0.0;                      // (p~_i - p* c) / (1 - p* c)
  double reparam_defect = 0.0;
};

// Throws NotPreMatching, RegularityViolation.
CouplingResult extract_coupling(const StandardPair& pair1, const StandardPair& pair2, const ToralAutomorphism& t,
                                const CouplingParams& params);

struct PreMatch {
  int n0 = 0;
  double delta = 0.0;
  double tau1 = 0.0, tau2 = 0.0;
  double s = 0.0;
};

// First n <= n_max at which the pushed families contain a pre-matching pair.
std::optional<PreMatch> find_prematching(const StandardPair& pair1, const StandardPair& pair2,
                                         const ToralAutomorphism& t, int n_max);

struct CouplingPolicy {
  int depth = 3;  // 0: direct quadrature only
  int max_search_n = 12;
  double a = 1.0;
  double matching_tol = 1e-3;
};

struct LedgerEntry {
  int level = 0;
  int n0 = 0;
  double s = 0.0;
  double p_star = 0.0;
  double c = 0.0;
  double coupled_fraction = 0.0;
  double uncoupled_mass = 0.0;
};

struct CouplingExperiment {
  std::vector<double> decay;     // |f_*^n mu1(phi) - f_*^n mu2(phi)|, n = 0..n_max
  double fitted_nu = 0.0;
  std::vector<LedgerEntry> ledger;
  std::vector<double> envelope;  // coupling envelope per n (empty for depth 0)
  std::vector<std::string> errors;  // PreMatchingNotFound with the level index
};

CouplingExperiment coupling_decay_experiment(const StandardPair& pair1, const StandardPair& pair2,
                                             const TrigObservable2D& phi, const ToralAutomorphism& t, int n_max,
                                             const CouplingPolicy& policy = {});

}  // namespace ruelle

#include "ruelle/maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ruelle/error.hpp"

namespace ruelle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kGrid = 10000;

}  // namespace

ExpandingCircleMap::ExpandingCircleMap(int degree, std::vector<TrigTerm> terms)
    : degree_(degree), terms_(std::move(terms)) {
  if (degree_ < 2) throw NonExpanding("degree must be at least 2, got " + std::to_string(degree_));
  double slack = 0.0;
  for (const auto& t : terms_) {
    if (t.j < 1) throw NonExpanding("trig frequency j must be >= 1");
    if (!std::isfinite(t.a) || !std::isfinite(t.b)) throw NonExpanding("non-finite trig amplitude");
    slack += kTwoPi * t.j * (std::abs(t.a) + std::abs(t.b));
  }
  analytic_bound_ = degree_ - slack;
  if (!(analytic_bound_ > 1.0)) {
    std::ostringstream os;
    os << "analytic expansion bound " << analytic_bound_ << " <= 1";
    throw NonExpanding(os.str());
  }
  lambda_star_ = std::numeric_limits<double>::infinity();
  distortion_ = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    const double x = static_cast<double>(i) / kGrid;
    const double d1 = derivative(x);
    lambda_star_ = std::min(lambda_star_, d1);
    distortion_ = std::max(distortion_, std::abs(second_derivative(x)) / (d1 * d1));
  }
}

double ExpandingCircleMap::lift(double x) const {
  double v = degree_ * x;
  for (const auto& t : terms_) {
    const double arg = kTwoPi * t.j * x;
    v += t.a * std::sin(arg) + t.b * std::cos(arg);
  }
  return v;
}

double ExpandingCircleMap::operator()(double x) const {
  const double v = lift(x);
  const double r = v - std::floor(v);
  return r >= 1.0 ? 0.0 : r;
}

double ExpandingCircleMap::derivative(double x) const {
  double v = degree_;
  for (const auto& t : terms_) {
    const double w = kTwoPi * t.j;
    v += w * (t.a * std::cos(w * x) - t.b * std::sin(w * x));
  }
  return v;
}

double ExpandingCircleMap::second_derivative(double x) const {
  double v = 0.0;
  for (const auto& t : terms_) {
    const double w = kTwoPi * t.j;
    v -= w * w * (t.a * std::sin(w * x) + t.b * std::cos(w * x));
  }
  return v;
}

ExpandingCircleMap ExpandingCircleMap::perturbed(int j, double da, double db) const {
  auto terms = terms_;
  auto it = std::find_if(terms.begin(), terms.end(), [j](const TrigTerm& t) { return t.j == j; });
  if (it == terms.end()) {
    terms.push_back({j, da, db});
  } else {
    it->a += da;
    it->b += db;
  }
  return ExpandingCircleMap(degree_, std::move(terms));
}

std::string ExpandingCircleMap::id() const {
  std::ostringstream os;
  os.precision(17);
  os << "expanding(d=" << degree_;
  for (const auto& t : terms_) os << ";j=" << t.j << ",a=" << t.a << ",b=" << t.b;
  os << ")";
  return os.str();
}

ExpandingCircleMap build_expanding_map(int degree, std::vector<TrigTerm> terms) {
  return ExpandingCircleMap(degree, std::move(terms));
}

ExpandingCircleMap doubling_map() { return ExpandingCircleMap(2, {}); }

std::vector<Preimage> inverse_branches(const ExpandingCircleMap& map, double x) {
  const int d = map.degree();
  const double f0 = map.lift(0.0);
  x -= std::floor(x);
  // Targets x + m in [F(0), F(0) + d).
  const double m0 = std::ceil(f0 - x);
  std::vector<Preimage> out;
  out.reserve(d);
  for (int i = 0; i < d; ++i) {
    double target = x + m0 + i;
    if (target >= f0 + d) target -= d;
    double lo = 0.0, hi = 1.0;
    double y = std::clamp((target - f0) / d, 0.0, 1.0);
    bool done = false;
    for (int it = 0; it < 200; ++it) {
      const double g = map.lift(y) - target;
      if (std::abs(g) <= 1e-14 * (1.0 + std::abs(target))) {
        done = true;
        break;
      }
      if (g < 0.0) lo = y; else hi = y;
      double next = y - g / map.derivative(y);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo < 1e-16) {
        y = next;
        done = true;
        break;
      }
      y = next;
    }
    if (!done) throw ConvergenceFailure("inverse branch did not converge for x=" + std::to_string(x));
    if (y >= 1.0) y -= 1.0;
    out.push_back({y, map.derivative(y)});
  }
  std::sort(out.begin(), out.end(), [](const Preimage& p, const Preimage& q) { return p.y < q.y; });
  return out;
}

double circle_distance(double x) {
  const double r = x - std::floor(x);
  return std::min(r, 1.0 - r);
}

Bump::Bump(double rho1, double rho2) : rho1_(rho1), rho2_(rho2) {
  if (!(rho1 > 0.0 && rho2 > rho1 && rho2 < 0.5)) throw InvalidContractingMap("bump radii need 0 < rho1 < rho2 < 1/2");
}

double Bump::operator()(double x) const {
  const double r = circle_distance(x);
  if (r <= rho1_) return 1.0;
  if (r >= rho2_) return 0.0;
  const double u = (r - rho1_) / (rho2_ - rho1_);
  return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double ContractingCircleMap::default_kappa() { return 3.0 / (8.0 * std::numbers::pi); }

ContractingCircleMap::ContractingCircleMap(double kappa, double rho1, double rho2)
    : kappa_(kappa), bump_(rho1, rho2) {
  if (!(kappa > 0.0 && kappa < 1.0 / kTwoPi)) throw InvalidContractingMap("kappa must lie in (0, 1/(2 pi))");
  for (int i = 0; i < kGrid; ++i) {
    const double x = static_cast<double>(i) / kGrid;
    contraction_bound_ = std::max(contraction_bound_, bump_(x) * std::abs(derivative(x)));
  }
  if (!(contraction_bound_ < 1.0))
    throw InvalidContractingMap("sup |psi f'| = " + std::to_string(contraction_bound_) + " is not < 1");
}

double ContractingCircleMap::lift(double x) const { return x - kappa_ * std::sin(kTwoPi * x); }

double ContractingCircleMap::derivative(double x) const { return 1.0 - kTwoPi * kappa_ * std::cos(kTwoPi * x); }

TrigObservable::TrigObservable(std::map<int, std::complex<double>> coeffs, bool real)
    : coeffs_(std::move(coeffs)), real_(real) {
  if (real_) {
    for (const auto& [k, c] : coeffs_) {
      if (std::abs(coeff(-k) - std::conj(c)) > 1e-14 * (1.0 + std::abs(c)))
        throw std::invalid_argument("real observable needs c(-k) = conj(c(k)) at k=" + std::to_string(k));
    }
  }
}

TrigObservable TrigObservable::constant(double c) { return TrigObservable({{0, c}}, true); }

TrigObservable TrigObservable::cosine(int k, double amplitude) {
  if (k == 0) return constant(amplitude);
  return TrigObservable({{k, 0.5 * amplitude}, {-k, 0.5 * amplitude}}, true);
}

TrigObservable TrigObservable::sine(int k, double amplitude) {
  if (k == 0) return constant(0.0);
  const std::complex<double> c(0.0, -0.5 * amplitude);
  return TrigObservable({{k, c}, {-k, std::conj(c)}}, true);
}

std::complex<double> TrigObservable::eval(double x) const {
  std::complex<double> v = 0.0;
  for (const auto& [k, c] : coeffs_) v += c * std::polar(1.0, kTwoPi * k * x);
  return real_ ? std::complex<double>(v.real(), 0.0) : v;
}

double TrigObservable::derivative(double x) const {
  std::complex<double> v = 0.0;
  for (const auto& [k, c] : coeffs_) v += c * std::complex<double>(0.0, kTwoPi * k) * std::polar(1.0, kTwoPi * k * x);
  return v.real();
}

std::complex<double> TrigObservable::coeff(int k) const {
  auto it = coeffs_.find(k);
  return it == coeffs_.end() ? std::complex<double>(0.0) : it->second;
}

int TrigObservable::max_freq() const {
  int m = 0;
  for (const auto& [k, c] : coeffs_)
    if (c != 0.0) m = std::max(m, std::abs(k));
  return m;
}

TrigObservable TrigObservable::centered() const {
  auto c = coeffs_;
  c.erase(0);
  return TrigObservable(std::move(c), real_);
}

TrigObservable TrigObservable::operator+(const TrigObservable& other) const {
  auto c = coeffs_;
  for (const auto& [k, v] : other.coeffs_) c[k] += v;
  return TrigObservable(std::move(c), real_ && other.real_);
}

TrigObservable TrigObservable::operator*(double s) const {
  auto c = coeffs_;
  for (auto& [k, v] : c) v *= s;
  return TrigObservable(std::move(c), real_);
}

TrigObservable2D::TrigObservable2D(std::map<Lattice, std::complex<double>> coeffs, bool real)
    : coeffs_(std::move(coeffs)), real_(real) {
  if (real_) {
    for (const auto& [k, c] : coeffs_) {
      if (std::abs(coeff({-k[0], -k[1]}) - std::conj(c)) > 1e-14 * (1.0 + std::abs(c)))
        throw std::invalid_argument("real 2D observable needs c(-k) = conj(c(k))");
    }
  }
}

TrigObservable2D TrigObservable2D::cosine(Lattice k, double amplitude) {
  if (k[0] == 0 && k[1] == 0) return TrigObservable2D({{k, amplitude}}, true);
  return TrigObservable2D({{k, 0.5 * amplitude}, {{-k[0], -k[1]}, 0.5 * amplitude}}, true);
}

std::complex<double> TrigObservable2D::eval(double y1, double y2) const {
  std::complex<double> v = 0.0;
  for (const auto& [k, c] : coeffs_) {
    const double phase = std::fmod(static_cast<double>(k[0]) * y1 + static_cast<double>(k[1]) * y2, 1.0);
    v += c * std::polar(1.0, kTwoPi * phase);
  }
  return real_ ? std::complex<double>(v.real(), 0.0) : v;
}

std::array<std::complex<double>, 2> TrigObservable2D::gradient(double y1, double y2) const {
  std::array<std::complex<double>, 2> g{0.0, 0.0};
  for (const auto& [k, c] : coeffs_) {
    const double phase = std::fmod(static_cast<double>(k[0]) * y1 + static_cast<double>(k[1]) * y2, 1.0);
    const std::complex<double> e = c * std::complex<double>(0.0, kTwoPi) * std::polar(1.0, kTwoPi * phase);
    g[0] += e * static_cast<double>(k[0]);
    g[1] += e * static_cast<double>(k[1]);
  }
  if (real_) {
    g[0] = g[0].real();
    g[1] = g[1].real();
  }
  return g;
}

std::complex<double> TrigObservable2D::coeff(const Lattice& k) const {
  auto it = coeffs_.find(k);
  return it == coeffs_.end() ? std::complex<double>(0.0) : it->second;
}

}  // namespace ruelle

#include "ruelle/toral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ruelle/error.hpp"

namespace ruelle {

namespace {

bool mul_overflows(long long x, long long y, long long& out) { return __builtin_mul_overflow(x, y, &out); }

long long checked_dot(long long a, long long b, long long c, long long d) {
  long long p, q, r;
  if (mul_overflows(a, b, p) || mul_overflows(c, d, q) || __builtin_add_overflow(p, q, &r))
    throw Overflow("integer matrix product left the 64-bit range");
  return r;
}

bool in_box(const Lattice& k, long long K) { return std::llabs(k[0]) <= K && std::llabs(k[1]) <= K; }

}  // namespace

IntMatrix2 IntMatrix2::operator*(const IntMatrix2& o) const {
  return {checked_dot(a11, o.a11, a12, o.a21), checked_dot(a11, o.a12, a12, o.a22),
          checked_dot(a21, o.a11, a22, o.a21), checked_dot(a21, o.a12, a22, o.a22)};
}

IntMatrix2 ToralAutomorphism::power(int n) const {
  IntMatrix2 base = n >= 0 ? a_ : inv_;
  IntMatrix2 result;
  for (int m = std::abs(n); m > 0; m >>= 1) {
    if (m & 1) result = result * base;
    if (m > 1) base = base * base;
  }
  return result;
}

std::optional<Lattice> ToralAutomorphism::iterate(const Lattice& k, int n, long long escape) const {
  const IntMatrix2& m = n >= 0 ? a_ : inv_;
  Lattice v = k;
  for (int i = 0; i < std::abs(n); ++i) {
    if (std::llabs(v[0]) > escape || std::llabs(v[1]) > escape) return std::nullopt;
    v = m.apply(v);
  }
  return v;
}

Vec2 ToralAutomorphism::map_point(const Vec2& x, int n) const {
  const IntMatrix2 p = power(n);
  const long double x0 = x[0], x1 = x[1];
  long double y0 = static_cast<long double>(p.a11) * x0 + static_cast<long double>(p.a12) * x1;
  long double y1 = static_cast<long double>(p.a21) * x0 + static_cast<long double>(p.a22) * x1;
  y0 -= std::floor(y0);
  y1 -= std::floor(y1);
  return {static_cast<double>(y0), static_cast<double>(y1)};
}

ToralAutomorphism toral_eigen(const IntMatrix2& a) {
  if (a.trace() <= 2) throw NotHyperbolic("trace " + std::to_string(a.trace()) + " <= 2");
  if (a.a12 != a.a21 || a.a11 <= 0 || a.a12 <= 0 || a.a22 <= 0 || a.det() != 1)
    throw NotSymmetric("A must be symmetric with positive entries and determinant 1");
  ToralAutomorphism t;
  t.a_ = a;
  t.inv_ = {a.a22, -a.a12, -a.a21, a.a11};
  const double tr = static_cast<double>(a.trace());
  t.lambda_ = 0.5 * (tr + std::sqrt(tr * tr - 4.0));
  // (A - lambda) v = 0 with v = (a12, lambda - a11).
  double v0 = static_cast<double>(a.a12), v1 = t.lambda_ - static_cast<double>(a.a11);
  const double norm = std::hypot(v0, v1);
  v0 /= norm;
  v1 /= norm;
  if (v0 < 0) {
    v0 = -v0;
    v1 = -v1;
  }
  t.vu_ = {v0, v1};
  t.vs_ = {-v1, v0};
  return t;
}

ToralAutomorphism cat_map() { return toral_eigen({2, 1, 1, 1}); }

std::complex<double> FourierField2D::at(const Lattice& k) const {
  auto it = coeffs.find(k);
  return it == coeffs.end() ? std::complex<double>(0.0) : it->second;
}

double FourierField2D::energy() const {
  double e = 0.0;
  for (const auto& [k, c] : coeffs) e += std::norm(c);
  return e;
}

FourierField2D FourierField2D::from_observable(const TrigObservable2D& obs, int K) {
  FourierField2D f;
  f.K = K;
  f.real = obs.is_real();
  for (const auto& [k, c] : obs.coeffs()) {
    if (!in_box(k, K)) throw std::invalid_argument("observable frequency outside the truncation box");
    f.coeffs[k] = c;
  }
  return f;
}

FourierField2D FourierField2D::smooth_profile(int K, double r) {
  FourierField2D f;
  f.K = K;
  for (long long i = -K; i <= K; ++i)
    for (long long j = -K; j <= K; ++j)
      f.coeffs[{i, j}] = std::pow(1.0 + std::hypot(static_cast<double>(i), static_cast<double>(j)), -r - 2.0);
  return f;
}

FourierPush fourier_pushforward(const FourierField2D& field, const ToralAutomorphism& t, int n) {
  if (n < 0) throw std::invalid_argument("fourier_pushforward needs n >= 0");
  FourierPush out;
  out.field.K = field.K;
  out.field.real = field.real;
  for (const auto& [m, c] : field.coeffs) {
    // new_k = old_{A^n k}, so the old coefficient at m moves to A^{-n} m.
    auto k = t.iterate(m, -n);
    if (k && in_box(*k, field.K)) {
      out.field.coeffs[*k] = c;
    } else {
      ++out.dropped_count;
      out.dropped_energy += std::norm(c);
    }
  }
  return out;
}

std::vector<std::complex<double>> correlation_sequence(const FourierField2D& phi, const FourierField2D& h,
                                                       const ToralAutomorphism& t, int n_max) {
  if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (const auto& [k, c] : phi.coeffs) {
    if (k[0] == 0 && k[1] == 0) continue;
    // int phi L^n h = sum_k phi_k (L^n h)_{-k} = sum_k phi_k h_{A^n(-k)}
    Lattice m{-k[0], -k[1]};
    for (int n = 0; n <= n_max; ++n) {
      if (!in_box(m, h.K)) {
        if (std::abs(t.u_coord({static_cast<double>(m[0]), static_cast<double>(m[1])})) >
            std::sqrt(2.0) * static_cast<double>(h.K))
          break;
      } else {
        out[static_cast<std::size_t>(n)] += c * h.at(m);
      }
      m = t.matrix().apply(m);
    }
  }
  return out;
}

int correlation_vanishing_time(const FourierField2D& phi, const FourierField2D& h, const ToralAutomorphism& t) {
  int last = -1;
  const double radius = std::sqrt(2.0) * static_cast<double>(h.K);
  for (const auto& [k, c] : phi.coeffs) {
    if ((k[0] == 0 && k[1] == 0) || c == 0.0) continue;
    Lattice m{-k[0], -k[1]};
    for (int n = 0;; ++n) {
      if (in_box(m, h.K) && h.at(m) != 0.0) last = std::max(last, n);
      const Vec2 v{static_cast<double>(m[0]), static_cast<double>(m[1])};
      if (std::abs(t.u_coord(v)) > radius && std::abs(t.u_coord(v)) > std::abs(t.s_coord(v))) break;
      m = t.matrix().apply(m);
    }
  }
  return last + 1;
}

AnisotropicWeight::AnisotropicWeight(const ToralAutomorphism& t, const AnisotropicWeightParams& params)
    : t_(&t), params_(params) {
  if (params.p <= 0.0) throw std::invalid_argument("p must be positive");
  if (params.cone_u <= 0.0 || params.cone_s <= 0.0 || params.cone_u >= std::numbers::pi / 2 ||
      params.cone_s >= std::numbers::pi / 2)
    throw std::invalid_argument("cone half-angles must lie in (0, pi/2)");
  t_plus_ = std::tan(params.cone_u);
  t_minus_ = 1.0 / std::tan(params.cone_s);
  if (t_plus_ >= t_minus_) throw ConeViolation("I+ and I- overlap");
  const double lam = t.lambda();
  const double l2 = lam * lam;

  // Invariance on the angular grid: A(I+) in I+, A^{-1}(I-) in I-.
  const auto tan_of = [&](const Vec2& v) {
    const double u = t.u_coord(v);
    return u == 0.0 ? std::numeric_limits<double>::infinity() : std::abs(t.s_coord(v) / u);
  };
  const IntMatrix2& A = t.matrix();
  const IntMatrix2& Ai = t.inverse();
  const auto apply = [](const IntMatrix2& m, const Vec2& v) {
    return Vec2{m.a11 * v[0] + m.a12 * v[1], m.a21 * v[0] + m.a22 * v[1]};
  };
  constexpr int kGrid = 10000;
  for (int i = 0; i <= kGrid; ++i) {
    const double tau = -1.0 + 2.0 * i / kGrid;
    const Vec2 up{t.v_u()[0] + tau * t_plus_ * t.v_s()[0], t.v_u()[1] + tau * t_plus_ * t.v_s()[1]};
    if (tan_of(apply(A, up)) > t_plus_ * (1.0 + 1e-12)) throw ConeViolation("A(I+) is not inside I+");
    const Vec2 sp{t.v_s()[0] + tau * t.v_u()[0] / t_minus_, t.v_s()[1] + tau * t.v_u()[1] / t_minus_};
    if (tan_of(apply(Ai, sp)) < t_minus_ * (1.0 - 1e-12)) throw ConeViolation("A^{-1}(I-) is not inside I-");
  }

  s_a_ = std::log(t_plus_ / l2);
  s_b_ = std::log(l2 * t_minus_);

  const auto g = [&](double tt) { return (l2 + tt * tt / l2) / (1.0 + tt * tt); };
  nu2_ = std::max(1.0 / g(t_plus_), g(t_minus_));
  if (!(nu2_ < 1.0)) throw ConeViolation("cone estimate nu^2 = " + std::to_string(nu2_) + " is not below 1");

  gamma_ = std::numeric_limits<double>::infinity();
  const double lo = std::log(t_plus_), hi = std::log(t_minus_);
  for (int i = 0; i <= kGrid; ++i) {
    const double tt = std::exp(lo + (hi - lo) * i / kGrid);
    const Vec2 v{t.v_u()[0] + tt * t.v_s()[0], t.v_u()[1] + tt * t.v_s()[1]};
    const Vec2 w = apply(Ai, v);
    gamma_ = std::min(gamma_, alpha(t.u_coord(v), t.s_coord(v)) - alpha(t.u_coord(w), t.s_coord(w)));
  }
  if (!(gamma_ > 0.0)) throw ConeViolation("alpha is not strictly decreasing under A^{-1} outside the cones");

  // Spectral norm of A^{-1}.
  const double m11 = Ai.a11, m12 = Ai.a12, m21 = Ai.a21, m22 = Ai.a22;
  const double tr = m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22;
  const double det = m11 * m22 - m12 * m21;
  b_ = std::sqrt(0.5 * (tr + std::sqrt(std::max(0.0, tr * tr - 4.0 * det * det))));
  l_ = std::max(std::pow(b_ / nu2_, 1.0 / gamma_), params.K_cut);
}

double AnisotropicWeight::alpha(double ku, double ks) const {
  if (ku == 0.0) return ks == 0.0 ? 1.0 : -1.0;
  if (ks == 0.0) return 1.0;
  const double s = std::log(std::abs(ks) / std::abs(ku));
  const double u = std::clamp((s - s_a_) / (s_b_ - s_a_), 0.0, 1.0);
  return std::cos(std::numbers::pi * u);
}

double AnisotropicWeight::alpha(const Lattice& k) const {
  const Vec2 v{static_cast<double>(k[0]), static_cast<double>(k[1])};
  return alpha(t_->u_coord(v), t_->s_coord(v));
}

double AnisotropicWeight::bracket(const Lattice& k) const {
  const double x = static_cast<double>(k[0]), y = static_cast<double>(k[1]);
  return 1.0 + x * x + y * y;
}

double AnisotropicWeight::log_weight(const Lattice& k) const {
  if (k[0] == 0 && k[1] == 0) return 0.0;
  return params_.p * alpha(k) * std::log(bracket(k));
}

double AnisotropicWeight::weight(const Lattice& k) const { return std::exp(log_weight(k)); }

double AnisotropicWeight::lipschitz() const {
  // d alpha / d psi = -pi sin(pi u) / (s_b - s_a) * 2 / sin(2 psi) on the ramp.
  double best = 0.0;
  constexpr int kGrid = 100000;
  const double psi_a = std::atan(std::exp(s_a_)), psi_b = std::atan(std::exp(s_b_));
  for (int i = 0; i <= kGrid; ++i) {
    const double psi = psi_a + (psi_b - psi_a) * i / kGrid;
    const double u = (std::log(std::tan(psi)) - s_a_) / (s_b_ - s_a_);
    best = std::max(best, std::numbers::pi * std::sin(std::numbers::pi * u) / (s_b_ - s_a_) * 2.0 /
                              std::sin(2.0 * psi));
  }
  return best;
}

double anisotropic_weight(const AnisotropicWeight& w, const Lattice& k) { return w.weight(k); }

LYRatioScan ly_ratio_scan(const ToralAutomorphism& t, const AnisotropicWeightParams& params, int K, bool keep_rows) {
  if (K < 1) throw std::invalid_argument("K must be positive");
  const AnisotropicWeight w(t, params);
  LYRatioScan out;
  out.L = w.L();
  out.B = w.B();
  out.gamma = w.gamma();
  out.nu_estimate = std::sqrt(w.nu2());
  out.target = std::pow(w.nu2(), params.p);

  const long side = 2L * K + 1;
  const long total = side * side;
  if (keep_rows) out.rows.resize(static_cast<std::size_t>(total));

  struct Partial {
    double best = -1.0;
    Lattice arg{0, 0};
    long transition = 0, violations = 0;
    double worst = 0.0;
  };
  std::vector<Partial> partial(static_cast<std::size_t>(side));

#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < side; ++i) {
    Partial& acc = partial[static_cast<std::size_t>(i)];
    const long long k1 = i - K;
    for (long j = 0; j < side; ++j) {
      const long long k2 = j - K;
      const Lattice k{k1, k2};
      const std::size_t idx = static_cast<std::size_t>(i * side + j);
      if (k1 == 0 && k2 == 0) {
        if (keep_rows) out.rows[idx] = {k, 1.0, true};
        continue;
      }
      const Lattice pre = t.inverse().apply(k);
      const double ratio = std::exp(w.log_weight(pre) - w.log_weight(k));
      const double br = w.bracket(k);
      const bool in_gamma = br <= out.L;
      if (keep_rows) out.rows[idx] = {k, ratio, in_gamma};
      if (!in_gamma && ratio > acc.best) {
        acc.best = ratio;
        acc.arg = k;
      }
      const Vec2 v{static_cast<double>(k1), static_cast<double>(k2)};
      const double ku = std::abs(t.u_coord(v)), ks = std::abs(t.s_coord(v));
      if (ks > w.t_plus() * ku && ks < w.t_minus() * ku) {
        ++acc.transition;
        const double cap = w.B() * std::pow(br, -w.gamma());
        acc.worst = std::max(acc.worst, ratio / cap);
        if (ratio > cap) ++acc.violations;
      }
    }
  }

  out.max_ratio_outside_gamma = 0.0;
  for (const auto& p : partial) {
    if (p.best > out.max_ratio_outside_gamma) {
      out.max_ratio_outside_gamma = p.best;
      out.argmax = p.arg;
    }
    out.transition_points += p.transition;
    out.transition_violations += p.violations;
    out.transition_worst = std::max(out.transition_worst, p.worst);
  }
  out.scanned = total - 1;
  for (long long i = -K; i <= K; ++i)
    for (long long j = -K; j <= K; ++j)
      if (!(i == 0 && j == 0) && w.bracket({i, j}) <= out.L) out.gamma_set.push_back({i, j});
  return out;
}

}  // namespace ruelle

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ruelle/error.hpp"
#include "ruelle/fit.hpp"
#include "ruelle/quadrature.hpp"
#include "ruelle/toral.hpp"

namespace ruelle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLengthTol = 1e-9;

// int_0^len exp(l0 + (l1 - l0) s / len) ds
double exp_linear_integral(double len, double l0, double l1) {
  const double d = l1 - l0;
  if (std::abs(d) < 1e-12) return len * std::exp(0.5 * (l0 + l1));
  return len * std::exp(l0) * std::expm1(d) / d;
}

double total_mass(const std::vector<double>& nodes, const std::vector<double>& log_h) {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) m += exp_linear_integral(nodes[i + 1] - nodes[i], log_h[i], log_h[i + 1]);
  return m;
}

Vec2 wrap(long double x0, long double x1) {
  x0 -= std::floor(x0);
  x1 -= std::floor(x1);
  return {static_cast<double>(x0), static_cast<double>(x1)};
}

Vec2 translate(const Vec2& x, const Vec2& dir, double t) {
  return wrap(static_cast<long double>(x[0]) + static_cast<long double>(t) * dir[0],
              static_cast<long double>(x[1]) + static_cast<long double>(t) * dir[1]);
}

long double lambda_power(double lambda, int n) { return std::pow(static_cast<long double>(lambda), n); }

double observable_sup(const TrigObservable2D& phi) {
  double s = 0.0;
  for (const auto& [k, c] : phi.coeffs()) s += std::abs(c);
  return s;
}

}  // namespace

double StandardPair::log_density(double t) const {
  if (t <= nodes.front()) {
    const double slope = (log_h[1] - log_h[0]) / (nodes[1] - nodes[0]);
    return log_h.front() + slope * (t - nodes.front());
  }
  if (t >= nodes.back()) {
    const std::size_t m = nodes.size();
    const double slope = (log_h[m - 1] - log_h[m - 2]) / (nodes[m - 1] - nodes[m - 2]);
    return log_h.back() + slope * (t - nodes.back());
  }
  const auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - nodes.begin()) - 1;
  const double w = (t - nodes[i]) / (nodes[i + 1] - nodes[i]);
  return (1.0 - w) * log_h[i] + w * log_h[i + 1];
}

double StandardPair::lipschitz() const {
  double l = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    l = std::max(l, std::abs(log_h[i + 1] - log_h[i]) / (nodes[i + 1] - nodes[i]));
  return l;
}

double StandardPair::mass(double lo, double hi) const {
  lo = std::max(lo, -b);
  hi = std::min(hi, b);
  if (hi <= lo) return 0.0;
  double m = 0.0;
  double left = lo, l_left = log_density(lo);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] <= lo) continue;
    const double right = std::min(nodes[i], hi);
    const double l_right = right == nodes[i] ? log_h[i] : log_density(right);
    m += exp_linear_integral(right - left, l_left, l_right);
    left = right;
    l_left = l_right;
    if (right >= hi) break;
  }
  return m;
}

StandardPair make_standard_pair_on_nodes(double b, const Vec2& x, const std::vector<double>& nodes,
                                         const std::vector<double>& log_h, double a) {
  if (!(b >= 0.5 - kLengthTol && b <= 1.0 + kLengthTol)) throw std::invalid_argument("half-length b must lie in [1/2, 1]");
  if (!(a > 0.0)) throw std::invalid_argument("log-Lipschitz constant a must be positive");
  if (nodes.size() < 2 || nodes.size() != log_h.size()) throw std::invalid_argument("need >= 2 density samples");
  if (std::abs(nodes.front() + b) > 1e-12 || std::abs(nodes.back() - b) > 1e-12)
    throw std::invalid_argument("density nodes must span [-b, b]");
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    if (!(nodes[i + 1] > nodes[i])) throw std::invalid_argument("density nodes must increase");
  for (double v : log_h)
    if (!std::isfinite(v)) throw std::invalid_argument("log-density must be finite");

  StandardPair p;
  p.b = b;
  p.x = wrap(x[0], x[1]);
  p.nodes = nodes;
  p.nodes.front() = -b;
  p.nodes.back() = b;
  p.log_h = log_h;
  p.a = a;
  const double lip = p.lipschitz();
  if (lip > a * (1.0 + 1e-12) + 1e-14) {
    std::ostringstream msg;
    msg << "sampled log-Lipschitz constant " << lip << " exceeds a = " << a;
    throw RegularityViolation(msg.str());
  }
  const double shift = std::log(total_mass(p.nodes, p.log_h));
  for (double& v : p.log_h) v -= shift;
  return p;
}

StandardPair make_standard_pair(double b, const Vec2& x, const std::vector<double>& log_h, double a) {
  const std::size_t m = log_h.size();
  if (m < 2) throw std::invalid_argument("need >= 2 density samples");
  std::vector<double> nodes(m);
  for (std::size_t i = 0; i < m; ++i) nodes[i] = -b + 2.0 * b * static_cast<double>(i) / static_cast<double>(m - 1);
  return make_standard_pair_on_nodes(b, x, nodes, log_h, a);
}

StandardPair uniform_pair(double b, const Vec2& x, double a) { return make_standard_pair(b, x, {0.0, 0.0}, a); }

std::complex<double> pair_expectation(const StandardPair& pair, const TrigObservable2D& phi,
                                      const ToralAutomorphism& t, int n, PairQuadratureInfo* info) {
  if (n < 0) throw std::invalid_argument("pair_expectation needs n >= 0");
  const long double stretch = lambda_power(t.lambda(), n);
  const Vec2 y0 = t.map_point(pair.x, n);

  struct Mode {
    std::complex<double> c;
    double theta;
    double omega;
  };
  std::vector<Mode> modes;
  double max_freq = 0.0;  // cycles per unit t
  for (const auto& [k, c] : phi.coeffs()) {
    const long double ph = static_cast<long double>(k[0]) * y0[0] + static_cast<long double>(k[1]) * y0[1];
    const double frac = static_cast<double>(ph - std::floor(ph));
    const double ku = t.u_coord({static_cast<double>(k[0]), static_cast<double>(k[1])});
    const double freq = static_cast<double>(stretch * ku);
    modes.push_back({c, kTwoPi * frac, kTwoPi * freq});
    max_freq = std::max(max_freq, std::abs(freq));
  }

  constexpr int kOrder = 8;
  constexpr long kCellsPerOscillation = 2;
  constexpr long kMaxCells = 1L << 22;
  const GaussRule& rule = gauss_legendre(kOrder);

  struct Cell {
    double lo, hi;
    std::size_t seg;
  };
  std::vector<Cell> cells;
  long wanted = 0;
  std::vector<long> per_seg(pair.nodes.size() - 1);
  for (std::size_t s = 0; s + 1 < pair.nodes.size(); ++s) {
    const double len = pair.nodes[s + 1] - pair.nodes[s];
    per_seg[s] = std::max(1L, static_cast<long>(std::ceil(kCellsPerOscillation * max_freq * len)));
    wanted += per_seg[s];
  }
  bool capped = false;
  if (wanted > kMaxCells) {
    capped = true;
    const double scale = static_cast<double>(kMaxCells) / static_cast<double>(wanted);
    for (auto& c : per_seg) c = std::max(1L, static_cast<long>(c * scale));
  }
  for (std::size_t s = 0; s < per_seg.size(); ++s) {
    const double lo = pair.nodes[s], hi = pair.nodes[s + 1];
    for (long j = 0; j < per_seg[s]; ++j)
      cells.push_back({lo + (hi - lo) * j / per_seg[s], lo + (hi - lo) * (j + 1) / per_seg[s], s});
  }
  if (info) {
    info->cells = static_cast<long>(cells.size());
    info->capped = capped;
  }

  constexpr long kChunk = 4096;
  const long n_cells = static_cast<long>(cells.size());
  const long n_chunks = (n_cells + kChunk - 1) / kChunk;
  std::vector<std::complex<double>> partial(static_cast<std::size_t>(n_chunks), 0.0);

#pragma omp parallel for schedule(static)
  for (long ch = 0; ch < n_chunks; ++ch) {
    std::complex<double> acc = 0.0;
    for (long ci = ch * kChunk; ci < std::min(n_cells, (ch + 1) * kChunk); ++ci) {
      const Cell& cell = cells[static_cast<std::size_t>(ci)];
      const double t0 = pair.nodes[cell.seg], t1 = pair.nodes[cell.seg + 1];
      const double l0 = pair.log_h[cell.seg], l1 = pair.log_h[cell.seg + 1];
      const double half = 0.5 * (cell.hi - cell.lo), mid = 0.5 * (cell.hi + cell.lo);
      for (int q = 0; q < kOrder; ++q) {
        const double tt = mid + half * rule.nodes[static_cast<std::size_t>(q)];
        const double h = std::exp(l0 + (l1 - l0) * (tt - t0) / (t1 - t0));
        std::complex<double> v = 0.0;
        for (const Mode& m : modes) v += m.c * std::polar(1.0, m.theta + m.omega * tt);
        acc += half * rule.weights[static_cast<std::size_t>(q)] * h * v;
      }
    }
    partial[static_cast<std::size_t>(ch)] = acc;
  }
  std::complex<double> total = 0.0;
  for (const auto& p : partial) total += p;
  return phi.is_real() ? std::complex<double>(total.real(), 0.0) : total;
}

namespace {

// Children of the pushed pair on stretched intervals [u0, u1] of [-L, L].
StandardFamily push_intervals(const StandardPair& pair, const ToralAutomorphism& t, int n,
                              const std::vector<std::pair<double, double>>& intervals) {
  const long double stretch = lambda_power(t.lambda(), n);
  const double st = static_cast<double>(stretch);
  const Vec2 y0 = t.map_point(pair.x, n);
  const double a_child = pair.a / st;
  StandardFamily fam;
  for (const auto& [u0, u1] : intervals) {
    const double centre = 0.5 * (u0 + u1);
    const double delta = 0.5 * (u1 - u0);
    std::vector<double> nodes{-delta};
    std::vector<double> logs{pair.log_density(u0 / st)};
    for (std::size_t i = 0; i < pair.nodes.size(); ++i) {
      const double u = pair.nodes[i] * st;
      if (u > u0 + 1e-12 * st && u < u1 - 1e-12 * st) {
        nodes.push_back(u - centre);
        logs.push_back(pair.log_h[i]);
      }
    }
    nodes.push_back(delta);
    logs.push_back(pair.log_density(u1 / st));
    const double p = pair.mass(u0 / st, u1 / st);
    StandardPair child = make_standard_pair_on_nodes(delta, translate(y0, t.v_u(), centre), nodes, logs, a_child);
    fam.pairs.push_back(std::move(child));
    fam.masses.push_back(p);
  }
  return fam;
}

void split_uniform(double lo, double hi, std::vector<std::pair<double, double>>& out) {
  const double len = hi - lo;
  if (len < kLengthTol) return;
  if (len < 1.0 - kLengthTol) throw std::logic_error("remainder shorter than one unit");
  const long K = std::max(1L, static_cast<long>(std::ceil(len / 2.0 - 1e-12)));
  for (long i = 0; i < K; ++i) out.push_back({lo + len * i / K, lo + len * (i + 1) / K});
}

}  // namespace

StandardFamily push_standard_pair(const StandardPair& pair, const ToralAutomorphism& t, int n, double delta) {
  if (n < 0) throw std::invalid_argument("push needs n >= 0");
  const double L = static_cast<double>(lambda_power(t.lambda(), n)) * pair.b;
  if (L < 1.0 - 1e-12) {
    std::ostringstream msg;
    msg << "stretched length lambda^n b = " << L << " < 1";
    throw TooShort(msg.str());
  }
  long K = static_cast<long>(std::ceil(L / 2.0 - 1e-12));
  if (delta > 0.0) {
    const long k = std::max(1L, std::lround(L / (2.0 * delta)));
    const double d = L / (2.0 * static_cast<double>(k));
    if (d >= 0.5 - 1e-12 && d <= 1.0 + 1e-12) K = k;
  }
  // 2K pieces of half-length delta = L / (2K) tile [-L, L].
  const long pieces = 2 * std::max(1L, K);
  std::vector<std::pair<double, double>> intervals;
  for (long i = 0; i < pieces; ++i)
    intervals.push_back({-L + 2.0 * L * i / pieces, -L + 2.0 * L * (i + 1) / pieces});
  return push_intervals(pair, t, n, intervals);
}

std::pair<StandardFamily, int> push_with_piece(const StandardPair& pair, const ToralAutomorphism& t, int n,
                                               double tau, double delta) {
  const double L = static_cast<double>(lambda_power(t.lambda(), n)) * pair.b;
  if (L < 1.0 - 1e-12) throw TooShort("stretched length below 1");
  if (tau - delta < -L - kLengthTol || tau + delta > L + kLengthTol)
    throw std::invalid_argument("special piece leaves the stretched segment");
  std::vector<std::pair<double, double>> intervals;
  split_uniform(-L, tau - delta, intervals);
  const int idx = static_cast<int>(intervals.size());
  intervals.push_back({std::max(-L, tau - delta), std::min(L, tau + delta)});
  split_uniform(tau + delta, L, intervals);
  return {push_intervals(pair, t, n, intervals), idx};
}

std::optional<std::pair<double, double>> separation(const ToralAutomorphism& t, const Vec2& x1, const Vec2& x2,
                                                    double s_lo, double s_hi) {
  std::optional<std::pair<double, double>> best;
  const double d0 = x2[0] - x1[0], d1 = x2[1] - x1[1];
  for (int m0 = -4; m0 <= 4; ++m0) {
    for (int m1 = -4; m1 <= 4; ++m1) {
      const Vec2 w{d0 + m0, d1 + m1};
      const double s = t.s_coord(w), e = t.u_coord(w);
      if (s < s_lo - 1e-12 || s > s_hi + 1e-12) continue;
      if (!best || std::abs(e) < std::abs(best->second)) best = std::make_pair(s, e);
    }
  }
  return best;
}

double stable_derivative_bound(const TrigObservable2D& phi, const ToralAutomorphism& t) {
  double s = 0.0;
  for (const auto& [k, c] : phi.coeffs())
    s += std::abs(c) * kTwoPi * std::abs(t.s_coord({static_cast<double>(k[0]), static_cast<double>(k[1])}));
  return s;
}

namespace {

bool same_density(const StandardPair& p, const StandardPair& q, double tol) {
  if (std::abs(p.b - q.b) > tol || p.nodes.size() != q.nodes.size()) return false;
  for (std::size_t i = 0; i < p.nodes.size(); ++i)
    if (std::abs(p.nodes[i] - q.nodes[i]) > tol || std::abs(p.log_h[i] - q.log_h[i]) > tol) return false;
  return true;
}

}  // namespace

MatchingCheck matching_bound_check(const StandardPair& pair1, const StandardPair& pair2, double s,
                                   const TrigObservable2D& phi, const ToralAutomorphism& t, int n) {
  if (!same_density(pair1, pair2, 1e-12)) throw NotMatching("pairs differ in b or density");
  if (s < 1.0 || s > 2.0) throw NotMatching("separation s must lie in [1, 2]");
  const auto sep = separation(t, pair1.x, pair2.x, s - 1e-9, s + 1e-9);
  if (!sep || std::abs(sep->second) > 1e-9) throw NotMatching("base points are not separated by s v_s");
  MatchingCheck out;
  out.measured = std::abs(pair_expectation(pair1, phi, t, n) - pair_expectation(pair2, phi, t, n));
  const double decay = static_cast<double>(1.0L / lambda_power(t.lambda(), n));
  out.bound = s * stable_derivative_bound(phi, t) * decay;
  out.kantorovich_bound = 2.0 * pair1.b * std::exp(pair1.a * pair1.b) * decay;
  out.coupling_cost = s * decay;
  return out;
}

CouplingResult extract_coupling(const StandardPair& pair1, const StandardPair& pair2, const ToralAutomorphism& t,
                                const CouplingParams& params) {
  if (std::abs(pair1.b - pair2.b) > 1e-12) throw NotPreMatching("pairs have different half-lengths");
  const auto sep = separation(t, pair1.x, pair2.x);
  if (!sep || std::abs(sep->second) > params.matching_tol) {
    std::ostringstream msg;
    msg << "base points are not s v_s + e v_u apart with s in [1, 2] and |e| <= " << params.matching_tol;
    throw NotPreMatching(msg.str());
  }
  if (!(params.mass1 > 0.0) || !(params.mass2 > 0.0)) throw std::invalid_argument("pair masses must be positive");

  CouplingResult out;
  out.s = sep->first;
  out.e = sep->second;
  out.a_eff = std::max(pair1.a, pair2.a);
  out.c_max = std::exp(-2.0 * out.a_eff);
  out.c = params.c < 0.0 ? 0.5 * out.c_max : params.c;
  if (!(out.c > 0.0) || out.c > out.c_max * (1.0 + 1e-15)) {
    std::ostringstream msg;
    msg << "coupling constant c = " << out.c << " outside (0, " << out.c_max << "]";
    throw std::invalid_argument(msg.str());
  }
  out.gamma = out.c / (2.0 * std::exp(-2.0 * out.a_eff) - out.c);
  const double b = pair1.b;

  // Absorb e by sliding pair2 along its own unstable segment.
  StandardPair second = pair2;
  if (out.e != 0.0) {
    std::vector<double> logs(pair2.nodes.size());
    for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = pair2.log_density(pair2.nodes[i] - out.e);
    out.reparam_defect = std::abs(1.0 - pair2.mass(-b - out.e, b - out.e));
    second = make_standard_pair_on_nodes(b, translate(pair2.x, t.v_u(), -out.e), pair2.nodes, logs, pair2.a);
  }

  out.p_star = std::min(params.mass1, params.mass2);
  out.coupled_mass = out.c * out.p_star;
  out.residual_mass1 = params.mass1 - out.coupled_mass;
  out.residual_mass2 = params.mass2 - out.coupled_mass;
  out.p0_1 = out.residual_mass1 / (1.0 - out.coupled_mass);
  out.p0_2 = out.residual_mass2 / (1.0 - out.coupled_mass);
  out.matched1 = uniform_pair(b, pair1.x, params.a);
  out.matched2 = uniform_pair(b, second.x, params.a);

  const int refine = std::max(1, params.residual_refine);
  const auto residual = [&](const StandardPair& p, double mass, double rmass) {
    std::vector<double> nodes, logs;
    for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
      for (int j = 0; j < refine; ++j) {
        const double tt = p.nodes[i] + (p.nodes[i + 1] - p.nodes[i]) * j / refine;
        nodes.push_back(tt);
      }
    }
    nodes.push_back(p.nodes.back());
    for (double tt : nodes) {
      const double v = (mass * p.density(tt) - out.coupled_mass / (2.0 * b)) / rmass;
      if (!(v > 0.0)) throw RegularityViolation("residual density is not positive; c too large");
      logs.push_back(std::log(v));
    }
    return make_standard_pair_on_nodes(b, p.x, nodes, logs, params.a);
  };
  out.residual1 = residual(pair1, params.mass1, out.residual_mass1);
  out.residual2 = residual(second, params.mass2, out.residual_mass2);
  return out;
}

namespace {

// Centres tau for a piece of half-length delta inside [-L, L] whose remainders
// are empty or at least one unit long.
bool feasible(double tau, double L, double delta) {
  const double lo = -L + delta, hi = L - delta;
  if (tau < lo - kLengthTol || tau > hi + kLengthTol) return false;
  if (std::abs(tau - lo) <= kLengthTol || std::abs(tau - hi) <= kLengthTol) return true;
  return tau >= lo + 1.0 - kLengthTol && tau <= hi - 1.0 + kLengthTol;
}

std::vector<double> feasible_candidates(double L, double delta) {
  std::vector<double> c{-L + delta, L - delta};
  if (-L + delta + 1.0 <= L - delta - 1.0) {
    c.push_back(-L + delta + 1.0);
    c.push_back(L - delta - 1.0);
  }
  return c;
}

}  // namespace

std::optional<PreMatch> find_prematching(const StandardPair& pair1, const StandardPair& pair2,
                                         const ToralAutomorphism& t, int n_max) {
  for (int n = 1; n <= n_max; ++n) {
    const double st = static_cast<double>(lambda_power(t.lambda(), n));
    const double L1 = st * pair1.b, L2 = st * pair2.b;
    if (L1 < 1.0 || L2 < 1.0) continue;
    const IntMatrix2 P = t.power(n);
    const long double d0 = static_cast<long double>(P.a11) * (static_cast<long double>(pair2.x[0]) - pair1.x[0]) +
                           static_cast<long double>(P.a12) * (static_cast<long double>(pair2.x[1]) - pair1.x[1]);
    const long double d1 = static_cast<long double>(P.a21) * (static_cast<long double>(pair2.x[0]) - pair1.x[0]) +
                           static_cast<long double>(P.a22) * (static_cast<long double>(pair2.x[1]) - pair1.x[1]);
    const double D0 = static_cast<double>(d0 - std::floor(d0)), D1 = static_cast<double>(d1 - std::floor(d1));
    const double reach = 2.0 + L1 + L2;
    std::optional<PreMatch> best;
    for (long m0 = static_cast<long>(std::floor(-reach - D0)); m0 <= static_cast<long>(std::ceil(reach - D0)); ++m0) {
      for (long m1 = static_cast<long>(std::floor(-reach - D1)); m1 <= static_cast<long>(std::ceil(reach - D1)); ++m1) {
        const Vec2 w{D0 + m0, D1 + m1};
        const double sigma = t.s_coord(w), eps = t.u_coord(w);
        if (sigma < 1.0 || sigma > 2.0 || std::abs(eps) > L1 + L2) continue;
        for (int di = 0; di <= 10; ++di) {
          const double delta = 1.0 - 0.05 * di;
          if (best && delta <= best->delta) break;
          if (delta > L1 + 1e-12 || delta > L2 + 1e-12) continue;
          std::vector<double> cands = feasible_candidates(L1, delta);
          for (double c : feasible_candidates(L2, delta)) cands.push_back(c + eps);
          for (double tau1 : cands) {
            const double tau2 = tau1 - eps;
            if (feasible(tau1, L1, delta) && feasible(tau2, L2, delta)) {
              best = PreMatch{n, delta, tau1, tau2, sigma};
              break;
            }
          }
        }
      }
    }
    if (best) return best;
  }
  return std::nullopt;
}

CouplingExperiment coupling_decay_experiment(const StandardPair& pair1, const StandardPair& pair2,
                                             const TrigObservable2D& phi, const ToralAutomorphism& t, int n_max,
                                             const CouplingPolicy& policy) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  if (policy.depth < 0) throw std::invalid_argument("depth must be >= 0");
  CouplingExperiment out;
  for (int n = 0; n <= n_max; ++n)
    out.decay.push_back(std::abs(pair_expectation(pair1, phi, t, n) - pair_expectation(pair2, phi, t, n)));

  std::vector<double> xs, ys;
  for (int n = 1; n <= n_max; ++n) {
    if (out.decay[static_cast<std::size_t>(n)] > 1e-300) {
      xs.push_back(n);
      ys.push_back(std::log(out.decay[static_cast<std::size_t>(n)]));
    }
  }
  out.fitted_nu = xs.size() >= 2 ? std::exp(fit_line(xs, ys).slope) : 0.0;
  if (policy.depth == 0) return out;

  StandardPair A = pair1, B = pair2;
  double uncoupled = 1.0;
  std::vector<int> level_time;
  int elapsed = 0;
  for (int level = 1; level <= policy.depth; ++level) {
    const auto pm = find_prematching(A, B, t, policy.max_search_n);
    if (!pm) {
      std::ostringstream msg;
      msg << "PreMatchingNotFound: no pre-matching pair within n <= " << policy.max_search_n << " at level " << level;
      out.errors.push_back(msg.str());
      break;
    }
    try {
      auto [famA, ia] = push_with_piece(A, t, pm->n0, pm->tau1, pm->delta);
      auto [famB, ib] = push_with_piece(B, t, pm->n0, pm->tau2, pm->delta);
      CouplingParams cp;
      cp.a = policy.a;
      cp.matching_tol = policy.matching_tol;
      cp.mass1 = famA.masses[static_cast<std::size_t>(ia)];
      cp.mass2 = famB.masses[static_cast<std::size_t>(ib)];
      const CouplingResult cr =
          extract_coupling(famA.pairs[static_cast<std::size_t>(ia)], famB.pairs[static_cast<std::size_t>(ib)], t, cp);
      uncoupled *= 1.0 - cr.coupled_mass;
      elapsed += pm->n0;
      level_time.push_back(elapsed);
      out.ledger.push_back({level, pm->n0, cr.s, cr.p_star, cr.c, cr.coupled_mass, uncoupled});

      const auto heaviest = [](const StandardFamily& f, int skip, const StandardPair& fallback) {
        int best = -1;
        for (int i = 0; i < static_cast<int>(f.pairs.size()); ++i)
          if (i != skip && (best < 0 || f.masses[static_cast<std::size_t>(i)] > f.masses[static_cast<std::size_t>(best)]))
            best = i;
        return best < 0 ? fallback : f.pairs[static_cast<std::size_t>(best)];
      };
      A = heaviest(famA, ia, cr.residual1);
      B = heaviest(famB, ib, cr.residual2);
    } catch (const Error& e) {
      out.errors.push_back(e.name() + ": " + e.what() + " at level " + std::to_string(level));
      break;
    }
  }

  const double sup = observable_sup(phi);
  const double dphi = stable_derivative_bound(phi, t);
  for (int n = 0; n <= n_max; ++n) {
    double u = 1.0, matched = 0.0;
    for (std::size_t j = 0; j < out.ledger.size(); ++j) {
      if (level_time[j] > n) break;
      matched += u * out.ledger[j].coupled_fraction * out.ledger[j].s * dphi *
                 static_cast<double>(1.0L / lambda_power(t.lambda(), n - level_time[j]));
      u = out.ledger[j].uncoupled_mass;
    }
    out.envelope.push_back(2.0 * sup * u + matched);
  }
  return out;
}

}  // namespace ruelle

#include "ruelle/limits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ruelle/error.hpp"
#include "ruelle/fit.hpp"
#include "ruelle/quadrature.hpp"
#include "ruelle/rng.hpp"

namespace ruelle {

namespace {

constexpr std::complex<double> kI(0.0, 1.0);

// int g(x) u(x) dx for u the hat reconstruction, cell by cell.
double integrate_against_density(const RealFn& g, const HatCoefficients& u, int freq) {
  const int n = u.n;
  const int sub = std::max(1, 4 * freq / n + 1);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = static_cast<double>(k) / n;
    total += integrate_composite([&](double x) { return g(x) * u(x); }, a, a + 1.0 / n, sub, 8);
  }
  return total;
}

Eigen::VectorXd galerkin_density(const TransferMatrix& m) {
  const int n = m.n;
  Eigen::VectorXd a = Eigen::VectorXd::Ones(n);
  for (int it = 1; it <= 100000; ++it) {
    Eigen::VectorXd next = mass_solve(Eigen::VectorXd(m.entries * a));
    next *= n / next.sum();
    const double diff = (next - a).cwiseAbs().sum() / n;
    a = std::move(next);
    if (diff < 1e-13) return a;
  }
  throw NoConvergence("Galerkin invariant density: power iteration did not converge");
}

double norm1(const Eigen::MatrixXcd& a) {
  double best = 0.0;
  for (int j = 0; j < a.cols(); ++j) best = std::max(best, a.col(j).cwiseAbs().sum());
  return best;
}

}  // namespace

CltModel::CltModel(const ExpandingCircleMap& map, const TrigObservable& obs, int n, Scheme scheme, int quad_order)
    : map_(map), obs_(obs), centered_obs_(obs.centered()), n_(n), scheme_(scheme), quad_order_(quad_order) {
  if (!obs.is_real()) throw std::invalid_argument("CltModel: observable must be real");
  matrix_ = assemble_transfer_matrix(map_, n_, quad_order_);
  if (scheme_ == Scheme::Averaging) {
    density_ = leading_mode(matrix_).density;
  } else {
    density_ = HatCoefficients::from_vector(galerkin_density(matrix_));
  }
  if (obs_.max_freq() == 0) {
    mean_ = obs_.coeff(0).real();
    shift_ = 0.0;
  } else {
    mean_ = integrate_against_density([&](double x) { return obs_.value(x); }, density_, obs_.max_freq());
    shift_ = mean_ - obs_.coeff(0).real();
  }
}

Eigen::MatrixXcd CltModel::twisted(double nu) const {
  if (nu == 0.0) return matrix_.entries.cast<std::complex<double>>();
  return assemble_weighted_matrix(map_, n_, quad_order_,
                                  [&](double x) { return std::polar(1.0, nu * centered(x)); });
}

Eigen::MatrixXcd CltModel::step_operator(double nu) const {
  Eigen::MatrixXcd m = twisted(nu);
  return scheme_ == Scheme::Galerkin ? mass_solve(m) : m;
}

Eigen::MatrixXcd CltModel::derivative_operator() const {
  Eigen::MatrixXcd m =
      assemble_weighted_matrix(map_, n_, quad_order_, [&](double x) { return kI * centered(x); });
  return scheme_ == Scheme::Galerkin ? mass_solve(m) : m;
}

Eigen::VectorXcd CltModel::start_vector() const { return density_.vector().cast<std::complex<double>>(); }

Eigen::VectorXd CltModel::pairing_vector() const {
  const HatCoefficients m = project([&](double x) { return centered(x); }, n_, 8, std::max(4, 4 * obs_.max_freq() / n_ + 1));
  Eigen::VectorXd b = m.vector() / static_cast<double>(n_);
  return scheme_ == Scheme::Galerkin ? mass_solve(b) : b;
}

TwistedTransferMatrix twisted_matrix(const ExpandingCircleMap& map, const TrigObservable& obs, double nu, int n,
                                     int quad_order) {
  const CltModel model(map, obs, n, Scheme::Averaging, quad_order);
  return {n, nu, map.id(), model.twisted(nu)};
}

namespace {

struct CorrelationStepper {
  const CltModel& model;
  Eigen::VectorXd pairing;
  Eigen::VectorXd moments;  // hat moments of the current iterate
  double c0 = 0.0;

  explicit CorrelationStepper(const CltModel& m) : model(m) {
    const auto& h = model.density();
    const int freq = model.observable().max_freq();
    c0 = integrate_against_density([&](double x) { return model.centered(x) * model.centered(x); }, h, 2 * freq);
    pairing = model.pairing_vector();
    moments = transfer_moments(model.map(), [&](double x) { return model.centered(x) * h(x); }, model.n(), 8,
                               std::max(4, 4 * freq / model.n() + 1));
  }

  // Returns C_l for the current l and advances to l + 1.
  double next() {
    const double c = pairing.dot(moments);
    const Eigen::VectorXd nodal = model.scheme() == Scheme::Galerkin ? mass_solve(moments) : moments;
    moments = model.matrix().entries * nodal;
    return c;
  }
};

}  // namespace

VarianceResult green_kubo_variance(const CltModel& model, const GreenKuboOptions& opts) {
  CorrelationStepper stepper(model);
  VarianceResult r;
  r.mean = model.mean();
  r.terms.push_back(stepper.c0);
  double sum = stepper.c0;
  int small = 0;
  for (int l = 1; l <= opts.l_max; ++l) {
    const double c = stepper.next();
    r.terms.push_back(c);
    sum += 2.0 * c;
    small = std::abs(c) < opts.tail_tol ? small + 1 : 0;
    if (small == 3) {
      r.truncated_at = l;
      break;
    }
  }
  if (r.truncated_at == 0) {
    std::ostringstream os;
    os << "correlation series not below " << opts.tail_tol << " by l_max=" << opts.l_max;
    throw SlowDecay(os.str());
  }
  r.raw_sigma2 = sum;
  r.sigma2 = std::max(sum, 0.0);
  r.is_coboundary = r.sigma2 <= opts.coboundary_threshold;
  return r;
}

VarianceResult green_kubo_variance(const ExpandingCircleMap& map, const TrigObservable& obs,
                                   const GreenKuboOptions& opts) {
  return green_kubo_variance(CltModel(map, obs, opts.n_grid, opts.scheme), opts);
}

std::vector<double> correlation_terms(const CltModel& model, int count) {
  CorrelationStepper stepper(model);
  std::vector<double> out{stepper.c0};
  for (int l = 1; l < count; ++l) out.push_back(stepper.next());
  return out;
}

LeadingEigen twisted_leading_eigen(const Eigen::MatrixXcd& k, const Eigen::VectorXcd& start, int max_iterations) {
  LeadingEigen out;
  Eigen::VectorXcd v = start / start.norm();
  std::complex<double> lambda = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::VectorXcd w = k * v;
    lambda = v.dot(w);
    const double residual = (w - lambda * v).norm();
    const double nw = w.norm();
    if (nw == 0.0) throw NoConvergence("twisted power iteration hit the zero vector");
    v = w / nw;
    if (residual < 1e-13 * std::max(1.0, std::abs(lambda))) {
      out.iterations = it;
      out.eigenvalue = lambda;
      out.vector = v;
      return out;
    }
  }
  throw NoConvergence("twisted power iteration did not converge in " + std::to_string(max_iterations) + " steps");
}

LambdaCurve lambda_nu_curve(const CltModel& model, const std::vector<double>& nu_list, double fit_window) {
  LambdaCurve c;
  c.nu = nu_list;
  c.lambda.assign(nu_list.size(), 0.0);
  const Eigen::VectorXcd start = model.start_vector();
  for (std::size_t i = 0; i < nu_list.size(); ++i) {
    c.lambda[i] = twisted_leading_eigen(model.step_operator(nu_list[i]), start).eigenvalue;
  }
  std::vector<double> xs, re, im;
  for (std::size_t i = 0; i < nu_list.size(); ++i) {
    if (std::abs(nu_list[i]) <= fit_window + 1e-15) {
      xs.push_back(nu_list[i]);
      re.push_back(c.lambda[i].real());
      im.push_back(c.lambda[i].imag());
    }
  }
  c.fit_points = static_cast<int>(xs.size());
  if (c.fit_points >= 3) {
    const int degree = c.fit_points >= 9 ? 4 : 2;
    const auto pr = fit_polynomial(xs, re, degree);
    const auto pi = fit_polynomial(xs, im, degree);
    c.quad_coefficient = pr[2];
    c.linear_coefficient = std::hypot(pr[1], pi[1]);
  }
  return c;
}

std::complex<double> characteristic_function(const CltModel& model, double lambda, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("characteristic_function: n_steps must be >= 1");
  const Eigen::MatrixXcd k = model.step_operator(lambda / std::sqrt(static_cast<double>(n_steps)));
  Eigen::VectorXcd v = model.start_vector();
  for (int s = 0; s < n_steps; ++s) v = k * v;
  return model.integral(v);
}

namespace {

double bump_raw(double z) { return std::abs(z) < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) : 0.0; }

double bump_mass() {
  static const double mass = integrate_composite(bump_raw, -1.0, 1.0, 64, 16);
  return mass;
}

}  // namespace

double smoothing_kernel(double z) { return bump_raw(z) / bump_mass(); }

double smoothing_kernel_hat(double omega) {
  const int cells = 64 + static_cast<int>(std::abs(omega));
  return integrate_composite([&](double z) { return std::cos(omega * z) * bump_raw(z); }, -1.0, 1.0, cells, 16) /
         bump_mass();
}

LocalCltResult local_clt_density(const CltModel& model, const std::vector<double>& y_list, int n_steps,
                                 double epsilon, double sigma2, const LocalCltOptions& opts) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("local_clt_density: epsilon must be positive");
  LocalCltResult r;
  r.y = y_list;
  r.sigma2 = sigma2;
  const double lambda_max = opts.nu_max * std::sqrt(static_cast<double>(n_steps));
  const int chunk = 16;
  std::vector<double> weights;  // phi_n * psi_hat tail magnitudes
  bool done = false;
  for (int base = 0; !done; base += chunk) {
    std::vector<std::complex<double>> vals(chunk);
    std::vector<double> lam(chunk);
    for (int i = 0; i < chunk; ++i) lam[i] = (base + i) * opts.dlambda;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < chunk; ++i) {
      if (lam[i] <= lambda_max + 1e-12) vals[i] = characteristic_function(model, lam[i], n_steps);
    }
    double chunk_max = 0.0;
    for (int i = 0; i < chunk && lam[i] <= lambda_max + 1e-12; ++i) {
      const double tail = std::abs(vals[i]) * std::abs(smoothing_kernel_hat(epsilon * lam[i]));
      r.lambda_grid.push_back(lam[i]);
      r.char_values.push_back(vals[i]);
      weights.push_back(tail);
      chunk_max = std::max(chunk_max, tail);
    }
    if (chunk_max < opts.tail_tol) done = true;
    if (lam[chunk - 1] + opts.dlambda > lambda_max + 1e-12) done = true;
  }
  r.lambda_cut = r.lambda_grid.back();
  if (weights.back() > opts.tail_tol) {
    std::ostringstream os;
    os << "TruncationWarning: |phi_n(Lambda) psi_hat(eps Lambda)| = " << weights.back() << " at Lambda=" << r.lambda_cut;
    r.warnings.push_back(os.str());
  }
  const std::size_t m = r.lambda_grid.size();
  std::vector<double> kernel(m);
  for (std::size_t k = 0; k < m; ++k) kernel[k] = smoothing_kernel_hat(epsilon * r.lambda_grid[k]);
  for (double y : y_list) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double w = (k == 0 || k + 1 == m) ? 0.5 : 1.0;
      s += w * (std::polar(1.0, -r.lambda_grid[k] * y) * r.char_values[k]).real() * kernel[k];
    }
    r.density.push_back(s * opts.dlambda / std::numbers::pi);
    const double sd = std::sqrt(sigma2);
    r.gaussian.push_back(sd > 0.0 ? std::exp(-0.5 * y * y / sigma2) / (sd * std::sqrt(2.0 * std::numbers::pi)) : 0.0);
  }
  return r;
}

namespace {

bool is_linear(const ExpandingCircleMap& map) {
  for (const auto& t : map.terms())
    if (t.a != 0.0 || t.b != 0.0) return false;
  return true;
}

struct DigitWindow {
  std::uint64_t base = 2;
  std::uint64_t full = 0;  // base^digits
  std::uint64_t keep = 0;  // base^(digits-1)
  double inv_full = 0.0;
};

DigitWindow make_window(int d) {
  DigitWindow w;
  w.base = static_cast<std::uint64_t>(d);
  w.keep = 1;
  while (w.keep <= (std::uint64_t{1} << 62) / (w.base * w.base)) w.keep *= w.base;
  w.full = w.keep * w.base;
  w.inv_full = 1.0 / static_cast<double>(w.full);
  return w;
}

double sample_birkhoff(const CltModel& model, bool linear, const DigitWindow& win, int n_steps, std::uint64_t seed,
                       std::uint64_t index) {
  std::mt19937_64 rng = make_stream(seed, index);
  double sum = 0.0;
  if (linear) {
    std::uint64_t w = 0;
    for (std::uint64_t p = 1; p < win.full; p *= win.base) w = w * win.base + rng() % win.base;
    for (int k = 0; k < n_steps; ++k) {
      sum += model.centered(static_cast<double>(w) * win.inv_full);
      w = (w % win.keep) * win.base + rng() % win.base;
    }
  } else {
    double x = uniform01(rng);
    for (int k = 0; k < n_steps; ++k) {
      sum += model.centered(x);
      x = model.map()(x);
    }
  }
  return sum / std::sqrt(static_cast<double>(n_steps));
}

EmpiricalClt finish_clt(std::vector<double> samples, double sigma2, int bins, bool exact) {
  EmpiricalClt r;
  r.exact_digits = exact;
  r.sigma = std::sqrt(std::max(sigma2, 0.0));
  r.samples = std::move(samples);
  r.ks_distance = ks_to_normal(r.samples, r.sigma);
  double range = 4.0 * r.sigma;
  if (!(range > 0.0)) {
    for (double s : r.samples) range = std::max(range, std::abs(s));
    if (!(range > 0.0)) range = 1e-12;
  }
  for (int b = 0; b <= bins; ++b) r.bin_edges.push_back(-range + 2.0 * range * b / bins);
  r.bin_counts.assign(bins, 0);
  for (double s : r.samples) {
    const int b = static_cast<int>(std::floor((s + range) / (2.0 * range) * bins));
    if (b >= 0 && b < bins) ++r.bin_counts[b];
  }
  return r;
}

}  // namespace

double ks_to_normal(std::vector<double> samples, double sigma) {
  std::sort(samples.begin(), samples.end());
  const double m = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i];
    const double cdf = sigma > 0.0 ? 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0))) : (x >= 0.0 ? 1.0 : 0.0);
    d = std::max({d, (i + 1) / m - cdf, cdf - i / m});
  }
  return d;
}

EmpiricalClt empirical_clt(const CltModel& model, int n_steps, int n_samples, std::uint64_t seed, double sigma2,
                           int bins) {
  if (n_steps < 1 || n_samples < 1) throw std::invalid_argument("empirical_clt: n_steps and n_samples must be >= 1");
  const bool linear = is_linear(model.map());
  const DigitWindow win = make_window(model.map().degree());
  std::vector<double> samples(n_samples);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < n_samples; ++s) samples[s] = sample_birkhoff(model, linear, win, n_steps, seed, s);
  return finish_clt(std::move(samples), sigma2, bins, linear);
}

namespace reference {

EmpiricalClt empirical_clt(const CltModel& model, int n_steps, int n_samples, std::uint64_t seed, double sigma2,
                           int bins) {
  const bool linear = is_linear(model.map());
  const DigitWindow win = make_window(model.map().degree());
  std::vector<double> samples;
  for (int s = 0; s < n_samples; ++s) samples.push_back(sample_birkhoff(model, linear, win, n_steps, seed, s));
  return finish_clt(std::move(samples), sigma2, bins, linear);
}

}  // namespace reference

VarianceGrowth variance_growth_check(const CltModel& model, const std::vector<int>& n_list, double sigma2) {
  VarianceGrowth g;
  g.n = n_list;
  g.sigma2 = sigma2;
  int n_max = 1;
  for (int n : n_list) {
    if (n < 1) throw std::invalid_argument("variance_growth_check: n must be >= 1");
    n_max = std::max(n_max, n);
  }
  const auto c = correlation_terms(model, n_max);
  for (int n : n_list) {
    double v = c[0];
    for (int l = 1; l < n; ++l) v += 2.0 * (1.0 - static_cast<double>(l) / n) * c[l];
    g.values.push_back(v);
    g.max_deviation = std::max(g.max_deviation, std::abs(v - sigma2));
  }
  return g;
}

RadiusScan spectral_radius_scan(const CltModel& model, const std::vector<double>& nu_grid) {
  RadiusScan s;
  s.nu = nu_grid;
  s.radius.assign(nu_grid.size(), 0.0);
  for (std::size_t i = 0; i < nu_grid.size(); ++i) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(model.step_operator(nu_grid[i]), false);
    s.radius[i] = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  if (!s.radius.empty()) {
    s.min_radius = *std::min_element(s.radius.begin(), s.radius.end());
    s.max_radius = *std::max_element(s.radius.begin(), s.radius.end());
  }
  return s;
}

namespace {

Eigen::MatrixXcd spectral_projector(const Eigen::MatrixXcd& k, const Eigen::VectorXcd& start) {
  const Eigen::VectorXcd r = twisted_leading_eigen(k, start).vector;
  const Eigen::VectorXcd l =
      twisted_leading_eigen(k.transpose(), Eigen::VectorXcd::Ones(k.rows())).vector;
  const std::complex<double> norm = (l.transpose() * r)(0);
  return r * l.transpose() / norm;
}

}  // namespace

ProjectorCheck projector_derivative_check(const CltModel& model, double h_step, int k_max, double tail_tol) {
  const int n = model.n();
  const Eigen::VectorXcd start = model.start_vector();
  const Eigen::MatrixXcd k0 = model.step_operator(0.0);
  const Eigen::MatrixXcd pi0 = spectral_projector(k0, start);
  const Eigen::MatrixXcd fd =
      (spectral_projector(model.step_operator(h_step), start) - spectral_projector(model.step_operator(-h_step), start)) /
      (2.0 * h_step);
  const Eigen::MatrixXcd kp = model.derivative_operator();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd z = id - pi0;  // K_0^k (I - Pi)
  const Eigen::MatrixXcd right = kp * pi0;
  const Eigen::MatrixXcd left = pi0 * kp;
  Eigen::MatrixXcd series = Eigen::MatrixXcd::Zero(n, n);
  for (int k = 0; k <= k_max; ++k) {
    series += z * right + left * z;
    z = k0 * z;
  }
  ProjectorCheck c;
  c.tail_norm = norm1(z);
  if (c.tail_norm > tail_tol) {
    std::ostringstream os;
    os << "series tail " << c.tail_norm << " above " << tail_tol << " at k_max=" << k_max;
    throw SlowDecay(os.str());
  }
  c.residual = norm1(fd - series);
  c.block_identity = norm1(pi0 * fd * pi0);
  c.derivative_norm = norm1(fd);
  return c;
}

}  // namespace ruelle

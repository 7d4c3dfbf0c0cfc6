#include "ruelle/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hat_kernel.hpp"
#include "ruelle/error.hpp"
#include "ruelle/quadrature.hpp"

namespace ruelle {

double HatCoefficients::integral() const {
  double s = 0.0;
  for (double v : c) s += v;
  return s / n;
}

double HatCoefficients::operator()(double x) const {
  x -= std::floor(x);
  const double u = x * n;
  int i = static_cast<int>(std::floor(u));
  const double t = u - i;
  i = detail::wrap_index(i, n);
  return (1.0 - t) * c[i] + t * c[(i + 1) % n];
}

HatCoefficients HatCoefficients::from_vector(const Eigen::VectorXd& v) {
  HatCoefficients h;
  h.n = static_cast<int>(v.size());
  h.c.assign(v.data(), v.data() + v.size());
  return h;
}

HatCoefficients project(const RealFn& h, int n, int order, int subcells) {
  if (n < 1) throw std::invalid_argument("project: n must be positive");
  const GaussRule& rule = gauss_legendre(order);
  HatCoefficients out;
  out.n = n;
  out.c.assign(n, 0.0);
  const double hs = 1.0 / (static_cast<double>(n) * subcells);
  for (int k = 0; k < n; ++k) {
    // Cell [k/n, (k+1)/n] feeds hats k (descending side) and k+1 (ascending side).
    for (int s = 0; s < subcells; ++s) {
      const double a = static_cast<double>(k) / n + s * hs;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double x = a + 0.5 * hs * (1.0 + rule.nodes[q]);
        const double w = 0.5 * hs * rule.weights[q] * h(x) * n;
        const double t = n * x - k;
        out.c[k] += w * (1.0 - t);
        out.c[(k + 1) % n] += w * t;
      }
    }
  }
  return out;
}

namespace {

void check_columns(TransferMatrix& m) {
  m.max_column_defect = 0.0;
  for (int j = 0; j < m.n; ++j) m.max_column_defect = std::max(m.max_column_defect, std::abs(m.entries.col(j).sum() - 1.0));
  if (m.max_column_defect > 1e-10) {
    std::ostringstream os;
    os << "QuadratureWarning: column sums deviate from 1 by " << m.max_column_defect << "; raise quad_order";
    m.warnings.push_back(os.str());
  }
}

void check_assembly_args(int n, int quad_order) {
  if (n < 8 || n > 4096) throw std::invalid_argument("assemble: n must lie in [8, 4096]");
  if (quad_order < 4) throw std::invalid_argument("assemble: quad_order must be >= 4");
}

template <class S>
void cyclic_tridiagonal_solve(S* x, int n) {
  // Solves T x = r in place for T = periodic tridiag(1/6, 2/3, 1/6).
  const double a = 1.0 / 6.0, b = 2.0 / 3.0;
  const double gamma = -b;
  std::vector<double> diag(n, b), cp(n);
  diag[0] = b - gamma;
  diag[n - 1] = b - a * a / gamma;
  std::vector<S> z(n, S(0.0));
  z[0] = gamma;
  z[n - 1] = a;
  // Thomas forward sweep shared by both right-hand sides.
  cp[0] = a / diag[0];
  x[0] /= diag[0];
  z[0] /= diag[0];
  for (int i = 1; i < n; ++i) {
    const double m = diag[i] - a * cp[i - 1];
    cp[i] = a / m;
    x[i] = (x[i] - a * x[i - 1]) / m;
    z[i] = (z[i] - a * z[i - 1]) / m;
  }
  for (int i = n - 2; i >= 0; --i) {
    x[i] -= cp[i] * x[i + 1];
    z[i] -= cp[i] * z[i + 1];
  }
  const S fact = (x[0] + a * x[n - 1] / gamma) / (S(1.0) + z[0] + a * z[n - 1] / gamma);
  for (int i = 0; i < n; ++i) x[i] -= fact * z[i];
}

}  // namespace

TransferMatrix assemble_transfer_matrix(const ExpandingCircleMap& map, int n, int quad_order) {
  check_assembly_args(n, quad_order);
  TransferMatrix m;
  m.n = n;
  m.map_id = map.id();
  m.quad_order = quad_order;
  m.entries = Eigen::MatrixXd::Zero(n, n);
  const GaussRule& rule = gauss_legendre(quad_order);
#pragma omp parallel
  {
    std::vector<double> cuts;
#pragma omp for schedule(static)
    for (int j = 0; j < n; ++j) {
      detail::gather_column(map, n, j, rule, [](double) { return 1.0; }, m.entries.col(j).data(), cuts);
    }
  }
  check_columns(m);
  return m;
}

Eigen::MatrixXcd assemble_weighted_matrix(const ExpandingCircleMap& map, int n, int quad_order,
                                          const std::function<std::complex<double>(double)>& weight) {
  check_assembly_args(n, quad_order);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  const GaussRule& rule = gauss_legendre(quad_order);
#pragma omp parallel
  {
    std::vector<double> cuts;
#pragma omp for schedule(static)
    for (int j = 0; j < n; ++j) detail::gather_column(map, n, j, rule, weight, out.col(j).data(), cuts);
  }
  return out;
}

Eigen::VectorXd transfer_moments(const ExpandingCircleMap& map, const RealFn& g, int n, int order, int subcells) {
  const GaussRule& rule = gauss_legendre(order);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  std::vector<double> cuts;
  const double hs = 1.0 / (static_cast<double>(n) * subcells);
  for (int k = 0; k < n * subcells; ++k) {
    detail::for_each_node(map, n, k * hs, (k + 1) * hs, rule, cuts, [&](double x, double w, int row, double t) {
      const double v = n * w * g(x);
      out[row] += v * (1.0 - t);
      out[(row + 1) % n] += v * t;
    });
  }
  return out;
}

Eigen::VectorXd mass_apply(const Eigen::VectorXd& c) {
  const int n = static_cast<int>(c.size());
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = (c[(i + n - 1) % n] + 4.0 * c[i] + c[(i + 1) % n]) / 6.0;
  return out;
}

Eigen::VectorXd mass_solve(const Eigen::VectorXd& rhs) {
  Eigen::VectorXd x = rhs;
  cyclic_tridiagonal_solve(x.data(), static_cast<int>(x.size()));
  return x;
}

Eigen::VectorXcd mass_solve(const Eigen::VectorXcd& rhs) {
  Eigen::VectorXcd x = rhs;
  cyclic_tridiagonal_solve(x.data(), static_cast<int>(x.size()));
  return x;
}

Eigen::MatrixXcd mass_solve(const Eigen::MatrixXcd& rhs) {
  Eigen::MatrixXcd x = rhs;
  for (int j = 0; j < x.cols(); ++j) cyclic_tridiagonal_solve(x.col(j).data(), static_cast<int>(x.rows()));
  return x;
}

Eigen::MatrixXd mass_solve(const Eigen::MatrixXd& rhs) {
  Eigen::MatrixXd x = rhs;
  for (int j = 0; j < x.cols(); ++j) cyclic_tridiagonal_solve(x.col(j).data(), static_cast<int>(x.rows()));
  return x;
}

LeadingMode leading_mode(const TransferMatrix& m, int max_iterations) {
  const int n = m.n;
  Eigen::VectorXd c = Eigen::VectorXd::Ones(n);
  LeadingMode out;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd next = m.entries * c;
    next *= n / next.sum();
    const double diff = (next - c).cwiseAbs().sum() / n;
    c = std::move(next);
    if (diff < 1e-13) {
      out.iterations = it;
      break;
    }
    if (it == max_iterations) throw NoConvergence("power iteration did not converge in " + std::to_string(it) + " steps");
  }
  const Eigen::VectorXd mc = m.entries * c;
  out.eigenvalue = c.dot(mc) / c.dot(c);
  out.min_entry_before_clamp = c.minCoeff();
  c = c.cwiseMax(0.0);
  c *= n / c.sum();
  out.density = HatCoefficients::from_vector(c);
  return out;
}

std::vector<std::complex<double>> top_spectrum(const TransferMatrix& m, int count) {
  if (count < 1 || count > m.n) throw std::invalid_argument("top_spectrum: count must lie in [1, n]");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m.entries, false);
  std::vector<std::complex<double>> ev(solver.eigenvalues().data(), solver.eigenvalues().data() + m.n);
  std::stable_sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    return a.imag() > b.imag();
  });
  ev.resize(count);
  return ev;
}

SpectralReport spectral_report(const ExpandingCircleMap& map, int n, int count) {
  const TransferMatrix m = assemble_transfer_matrix(map, n);
  SpectralReport r;
  const LeadingMode lm = leading_mode(m);
  r.leading = lm.eigenvalue;
  r.density = lm.density;
  r.spectrum = top_spectrum(m, std::max(count, 2));
  r.gap = 1.0 - std::abs(r.spectrum[1]);
  r.essential_bound = 1.0 / map.lambda_star();
  return r;
}

ProjectionError projection_error_check(const TrigObservable& h, int n) {
  RealFn hv = [&](double y) { return h.value(y); };
  const int sub = std::max(4, 2 * h.max_freq() * 4 / n + 1);
  const HatCoefficients p = project(hv, n, 8, sub);
  ProjectionError out;
  for (int k = 0; k < n; ++k) {
    const double a = static_cast<double>(k) / n, b = static_cast<double>(k + 1) / n;
    out.measured += l1_norm([&](double x) { return hv(x) - p(x); }, a, b, sub, 8);
  }
  const double l1 = l1_norm(hv, 0.0, 1.0, 512, 8);
  const double d1 = l1_norm([&](double y) { return h.derivative(y); }, 0.0, 1.0, 512, 8);
  out.bound = (d1 + l1) / n;
  return out;
}

}  // namespace ruelle

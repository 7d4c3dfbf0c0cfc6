#include "ruelle/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "ruelle/fit.hpp"
#include "ruelle/quadrature.hpp"

namespace ruelle {

double weak_norm(const Eigen::VectorXd& c) { return c.cwiseAbs().sum() / static_cast<double>(c.size()); }

double strong_norm(const Eigen::VectorXd& c) {
  const int n = static_cast<int>(c.size());
  double d = 0.0;
  for (int i = 0; i < n; ++i) d += std::abs(c[(i + 1) % n] - c[i]);
  return weak_norm(c) + d;
}

TripleNormEstimate triple_norm_distance(const TransferMatrix& m0, const TransferMatrix& m1) {
  if (m0.n != m1.n) throw std::invalid_argument("triple_norm_distance: matrix sizes differ");
  const int n = m0.n;
  const Eigen::MatrixXd d = m0.entries - m1.entries;
  TripleNormEstimate est;
  for (int j = 0; j < n; ++j) est.upper = std::max(est.upper, d.col(j).cwiseAbs().sum());
  const int width = std::max(1, n / 8);
  Eigen::MatrixXd cand(n, 2 * n);
  cand.setZero();
  for (int j = 0; j < n; ++j) {
    cand(j, j) = 1.0;
    for (int off = -width; off <= width; ++off) {
      const int i = ((j + off) % n + n) % n;
      cand(i, n + j) = 1.0 - static_cast<double>(std::abs(off)) / width;
    }
  }
  const Eigen::MatrixXd image = d * cand;
  for (int c = 0; c < 2 * n; ++c) {
    est.lower = std::max(est.lower, weak_norm(image.col(c)) / strong_norm(cand.col(c)));
  }
  return est;
}

TripleNormEstimate triple_norm_distance(const ExpandingCircleMap& map0, const ExpandingCircleMap& map1, int n) {
  if (map0.degree() != map1.degree()) throw std::invalid_argument("triple_norm_distance: maps differ in degree");
  if (n < 64) throw std::invalid_argument("triple_norm_distance: n must be >= 64");
  return triple_norm_distance(assemble_transfer_matrix(map0, n), assemble_transfer_matrix(map1, n));
}

double density_l1_distance(const HatCoefficients& a, const HatCoefficients& b) {
  if (a.n == b.n) {
    const int n = a.n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = a.c[i] - b.c[i];
      const double v = a.c[(i + 1) % n] - b.c[(i + 1) % n];
      total += (u * v >= 0.0) ? 0.5 * (std::abs(u) + std::abs(v))
                              : 0.5 * (u * u + v * v) / (std::abs(u) + std::abs(v));
    }
    return total / n;
  }
  const int cells = std::max(a.n, b.n) * 4;
  return l1_norm([&](double x) { return a(x) - b(x); }, 0.0, 1.0, cells, 4);
}

namespace {

std::complex<double> second_eigenvalue(const TransferMatrix& m, int m_eigs) {
  const auto spec = top_spectrum(m, std::max(2, m_eigs));
  std::complex<double> l2 = spec[1];
  return l2.imag() < 0.0 ? std::conj(l2) : l2;
}

struct Baseline {
  TransferMatrix matrix;
  HatCoefficients density;
  std::complex<double> lambda2;
  HatCoefficients coarse_density;
};

Baseline baseline(const TransferMatrix& m, const TransferMatrix& coarse, int m_eigs) {
  return {m, leading_mode(m).density, second_eigenvalue(m, m_eigs), leading_mode(coarse).density};
}

StabilityRow compare(const Baseline& base, const TransferMatrix& m, const TransferMatrix& coarse, int m_eigs,
                     double epsilon) {
  StabilityRow row;
  row.epsilon = epsilon;
  row.n = m.n;
  const auto tn = triple_norm_distance(base.matrix, m);
  row.triple_norm = tn.lower;
  row.triple_norm_upper = tn.upper;
  const LeadingMode lm = leading_mode(m);
  row.leading = lm.eigenvalue;
  row.density_drift = density_l1_distance(base.density, lm.density);
  row.density_drift_coarse = density_l1_distance(base.coarse_density, leading_mode(coarse).density);
  row.lambda2_drift = std::abs(second_eigenvalue(m, m_eigs) - base.lambda2);
  return row;
}

template <class Body>
void parallel_rows(int count, Body&& body) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

StabilityTable deterministic_stability(const ExpandingCircleMap& map0, const std::vector<double>& eps_list, int n,
                                       int m_eigs) {
  const Baseline base =
      baseline(assemble_transfer_matrix(map0, n), assemble_transfer_matrix(map0, n / 2), m_eigs);
  StabilityTable t;
  t.rows.resize(eps_list.size());
  std::vector<ExpandingCircleMap> maps;
  for (double eps : eps_list) maps.push_back(map0.perturbed(1, eps, 0.0));
  parallel_rows(static_cast<int>(eps_list.size()), [&](int i) {
    t.rows[i] = compare(base, assemble_transfer_matrix(maps[i], n), assemble_transfer_matrix(maps[i], n / 2), m_eigs,
                        eps_list[i]);
  });
  double num = 0.0, den = 0.0;
  std::vector<double> lx, ly;
  for (const auto& r : t.rows) {
    if (r.epsilon == 0.0) continue;
    num += std::abs(r.epsilon) * r.triple_norm;
    den += r.epsilon * r.epsilon;
    if (r.density_drift > 0.0) {
      lx.push_back(std::log(std::abs(r.epsilon)));
      ly.push_back(std::log(r.density_drift));
    }
  }
  if (den > 0.0) t.fitted_D = num / den;
  if (lx.size() >= 2) t.fitted_exponent = fit_line(lx, ly).slope;
  return t;
}

StochasticOperator stochastic_operator(const std::vector<ExpandingCircleMap>& maps, const std::vector<double>& weights,
                                       int n) {
  if (maps.empty() || maps.size() != weights.size())
    throw std::invalid_argument("stochastic_operator: need one weight per map");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("stochastic_operator: weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("stochastic_operator: weights must sum to 1");
  StochasticOperator out;
  out.matrix.n = n;
  out.matrix.entries = Eigen::MatrixXd::Zero(n, n);
  out.matrix.map_id = "average(";
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const TransferMatrix m = assemble_transfer_matrix(maps[k], n);
    out.matrix.entries += weights[k] * m.entries;
    out.matrix.quad_order = m.quad_order;
    out.matrix.map_id += (k ? ";" : "") + maps[k].id();
    const double inv = 1.0 / maps[k].lambda_star();
    out.ly.mean_inv_lambda += weights[k] * inv;
    out.ly.mean_B += weights[k] * maps[k].distortion();
    out.ly.max_inv_lambda = std::max(out.ly.max_inv_lambda, inv);
    out.ly.max_B = std::max(out.ly.max_B, maps[k].distortion());
  }
  out.matrix.map_id += ")";
  for (int j = 0; j < n; ++j)
    out.matrix.max_column_defect = std::max(out.matrix.max_column_defect, std::abs(out.matrix.entries.col(j).sum() - 1.0));
  return out;
}

std::vector<ExpandingCircleMap> noise_family(const ExpandingCircleMap& map0, double amplitude, int n_random) {
  if (n_random < 1) throw std::invalid_argument("noise_family: n_random must be >= 1");
  std::vector<ExpandingCircleMap> maps;
  for (int k = 0; k < n_random; ++k) {
    const double w = -amplitude + (2.0 * k + 1.0) * amplitude / n_random;
    maps.push_back(map0.perturbed(1, w, 0.0));
  }
  return maps;
}

std::vector<StochasticStabilityRow> stochastic_stability(const ExpandingCircleMap& map0,
                                                         const std::vector<double>& amplitudes, int n_random, int n) {
  const int m_eigs = 4;
  const Baseline base =
      baseline(assemble_transfer_matrix(map0, n), assemble_transfer_matrix(map0, n / 2), m_eigs);
  std::vector<std::vector<ExpandingCircleMap>> families;
  for (double amp : amplitudes) families.push_back(noise_family(map0, amp, n_random));
  std::vector<StochasticStabilityRow> rows(amplitudes.size());
  parallel_rows(static_cast<int>(amplitudes.size()), [&](int i) {
    const std::vector<double> w(n_random, 1.0 / n_random);
    const StochasticOperator fine = stochastic_operator(families[i], w, n);
    const StochasticOperator coarse = stochastic_operator(families[i], w, n / 2);
    rows[i].row = compare(base, fine.matrix, coarse.matrix, m_eigs, amplitudes[i]);
    rows[i].ly = fine.ly;
  });
  return rows;
}

}  // namespace ruelle

#include <cmath>

#include "hat_kernel.hpp"
#include "ruelle/spectral.hpp"

namespace ruelle::reference {

TransferMatrix assemble_transfer_matrix(const ExpandingCircleMap& map, int n, int quad_order) {
  TransferMatrix m;
  m.n = n;
  m.map_id = map.id();
  m.quad_order = quad_order;
  m.entries = Eigen::MatrixXd::Zero(n, n);
  const GaussRule& rule = gauss_legendre(quad_order);
  std::vector<double> cuts;
  for (int k = 0; k < n; ++k) {
    const double a = static_cast<double>(k) / n;
    const double b = static_cast<double>(k + 1) / n;
    const int next = (k + 1) % n;
    detail::for_each_node(map, n, a, b, rule, cuts, [&](double x, double w, int row, double t) {
      const double s = n * x - k;
      const double up = n * w * s;            // hat_{k+1}(x)
      const double down = n * w * (1.0 - s);  // hat_k(x)
      const int row2 = (row + 1) % n;
      m.entries(row, k) += down * (1.0 - t);
      m.entries(row2, k) += down * t;
      m.entries(row, next) += up * (1.0 - t);
      m.entries(row2, next) += up * t;
    });
  }
  m.max_column_defect = 0.0;
  for (int j = 0; j < n; ++j) m.max_column_defect = std::max(m.max_column_defect, std::abs(m.entries.col(j).sum() - 1.0));
  return m;
}

}  // namespace ruelle::reference

#include "ruelle/fit.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace ruelle {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto c = fit_polynomial(x, y, 1);
  return {c[0], c[1]};
}

std::vector<double> fit_polynomial(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  if (x.size() != y.size() || static_cast<int>(x.size()) <= degree)
    throw std::invalid_argument("fit_polynomial: need more points than the degree");
  const int m = static_cast<int>(x.size());
  Eigen::MatrixXd V(m, degree + 1);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    double p = 1.0;
    for (int d = 0; d <= degree; ++d) {
      V(i, d) = p;
      p *= x[i];
    }
    rhs(i) = y[i];
  }
  const Eigen::VectorXd c = V.colPivHouseholderQr().solve(rhs);
  return std::vector<double>(c.data(), c.data() + c.size());
}

}  // namespace ruelle

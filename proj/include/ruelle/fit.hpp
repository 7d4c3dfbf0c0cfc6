#pragma once

#include <vector>

namespace ruelle {

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Least-squares polynomial coefficients c_0..c_degree.
std::vector<double> fit_polynomial(const std::vector<double>& x, const std::vector<double>& y, int degree);

}  // namespace ruelle

#pragma once

#include <vector>

#include "stfem/common.hpp"

namespace stfem {

/// Quadrature rule on the unit reference simplex
///   { xi in R^dim : xi_i >= 0, sum_i xi_i <= 1 }.
struct QuadratureRule {
  int dim = 0;
  int order = 0;  ///< exact for polynomials of total degree <= order
  std::vector<Point> points;
  std::vector<double> weights;  ///< sum to 1/dim! (the reference volume)

  int size() const { return static_cast<int>(points.size()); }
};

/// Rule exact for total degree <= order on the reference simplex.
/// Supported: dim in {1,2,3}, 0 <= order <= 10. All weights are positive.
QuadratureRule simplex_quadrature(int dim, int order);

/// Gauss nodes and weights for the weight (1-x)^alpha on (0,1).
/// n points integrate p(x)*(1-x)^alpha exactly for deg p <= 2n-1.
void gauss_jacobi_01(int n, int alpha, std::vector<double>& x,
                     std::vector<double>& w);

}  // namespace stfem

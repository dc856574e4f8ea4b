#include "stfem/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace stfem {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix built from the
// three-term recurrence of the orthogonal polynomials, weights come from the
// first components of the eigenvectors.
void gauss_jacobi_01(int n, int alpha, std::vector<double>& x,
                     std::vector<double>& w) {
  if (n < 1) throw InvalidInput("gauss_jacobi_01: need at least one point");
  if (alpha < 0) throw InvalidInput("gauss_jacobi_01: alpha must be >= 0");

  const double a = static_cast<double>(alpha);  // weight (1-x)^a, beta = 0
  Eigen::VectorXd diag(n), sub(n > 1 ? n - 1 : 1);
  diag[0] = -a / (a + 2.0);
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + a;
    diag[k] = -a * a / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + a;
    sub[k - 1] = std::sqrt(4.0 * k * k * (k + a) * (k + a) /
                           (s * s * (s + 1.0) * (s - 1.0)));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub.head(std::max(n - 1, 0)));
  if (es.info() != Eigen::Success)
    throw InvariantError("gauss_jacobi_01: tridiagonal eigensolve failed");

  // Total mass of (1-x)^a on (-1,1) is 2^(a+1)/(a+1); mapping to (0,1)
  // rescales it to 1/(a+1).
  const double mu0 = 1.0 / (a + 1.0);
  x.resize(n);
  w.resize(n);
  for (int k = 0; k < n; ++k) {
    x[k] = 0.5 * (1.0 + es.eigenvalues()[k]);
    w[k] = mu0 * sqr(es.eigenvectors()(0, k));
  }
}

QuadratureRule simplex_quadrature(int dim, int order) {
  if (dim < 1 || dim > 3)
    throw InvalidInput("simplex_quadrature: dim must be 1, 2 or 3");
  if (order < 0 || order > 10)
    throw InvalidInput("simplex_quadrature: order must be in [0,10]");

  const int m = order / 2 + 1;  // m Gauss points per direction: degree 2m-1

  QuadratureRule rule;
  rule.dim = dim;
  rule.order = order;

  std::vector<double> x0, w0, x1, w1, x2, w2;
  gauss_jacobi_01(m, 0, x0, w0);
  if (dim >= 2) gauss_jacobi_01(m, 1, x1, w1);
  if (dim >= 3) gauss_jacobi_01(m, 2, x2, w2);

  // Collapsed (conical product) coordinates map the unit cube onto the
  // simplex; the Jacobi weights absorb the Jacobian factors exactly.
  if (dim == 1) {
    for (int i = 0; i < m; ++i) {
      rule.points.push_back({x0[i], 0.0, 0.0});
      rule.weights.push_back(w0[i]);
    }
  } else if (dim == 2) {
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        rule.points.push_back({x0[i] * (1.0 - x1[j]), x1[j], 0.0});
        rule.weights.push_back(w0[i] * w1[j]);
      }
  } else {
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
          const double z = x2[k];
          const double y = x1[j] * (1.0 - z);
          const double x = x0[i] * (1.0 - x1[j]) * (1.0 - z);
          rule.points.push_back({x, y, z});
          rule.weights.push_back(w0[i] * w1[j] * w2[k]);
        }
  }
  return rule;
}

}  // namespace stfem

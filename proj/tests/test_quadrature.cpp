#include <doctest.h>

#include <cmath>
#include <vector>

#include "stfem/quadrature.hpp"

using namespace stfem;

namespace {

// Exact monomial integral over the unit simplex in R^n:
//   int x^a dx = prod(a_i!) / (|a| + n)!
double simplex_monomial(const std::vector<int>& a) {
  const int n = static_cast<int>(a.size());
  int total = n;
  double num = 1.0;
  for (int ai : a) {
    for (int k = 2; k <= ai; ++k) num *= k;
    total += ai;
  }
  double den = 1.0;
  for (int k = 2; k <= total; ++k) den *= k;
  return num / den;
}

double apply(const QuadratureRule& r, const std::vector<int>& a) {
  double s = 0.0;
  for (int q = 0; q < r.size(); ++q) {
    double v = 1.0;
    for (std::size_t c = 0; c < a.size(); ++c)
      v *= std::pow(r.points[q][c], a[c]);
    s += r.weights[q] * v;
  }
  return s;
}

}  // namespace

TEST_CASE("order-1 triangle rule is the barycenter rule") {
  const auto r = simplex_quadrature(2, 1);
  REQUIRE(r.size() == 1);
  CHECK(r.points[0][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.points[0][1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("weights are positive and sum to the reference volume") {
  const double vol[4] = {0.0, 1.0, 0.5, 1.0 / 6.0};
  for (int dim = 1; dim <= 3; ++dim)
    for (int order = 0; order <= 10; ++order) {
      const auto r = simplex_quadrature(dim, order);
      double s = 0.0;
      for (double w : r.weights) {
        CHECK(w > 0.0);
        s += w;
      }
      CHECK(s == doctest::Approx(vol[dim]).epsilon(1e-14));
    }
}

TEST_CASE("monomials integrate exactly up to the stated order") {
  for (int dim = 1; dim <= 3; ++dim)
    for (int order = 0; order <= 10; ++order) {
      const auto r = simplex_quadrature(dim, order);
      // all multi-indices with |a| <= order
      std::vector<int> a(dim, 0);
      const auto test_all = [&](auto&& self, int pos, int left) -> void {
        if (pos == dim) {
          const double exact = simplex_monomial(a);
          const double got = apply(r, a);
          CHECK(std::abs(got - exact) <= 1e-14 * std::max(1.0, std::abs(exact)) + 1e-16);
          return;
        }
        for (int v = 0; v <= left; ++v) {
          a[pos] = v;
          self(self, pos + 1, left - v);
        }
      };
      test_all(test_all, 0, order);
    }
}

TEST_CASE("gauss-jacobi base rules match analytic moments") {
  std::vector<double> x, w;
  for (int alpha = 0; alpha <= 2; ++alpha)
    for (int n = 1; n <= 6; ++n) {
      gauss_jacobi_01(n, alpha, x, w);
      for (int deg = 0; deg <= 2 * n - 1; ++deg) {
        // int_0^1 t^deg (1-t)^alpha dt = deg! alpha! / (deg+alpha+1)!
        double exact = 1.0;
        for (int k = 1; k <= alpha; ++k) exact *= k;
        for (int k = 1; k <= deg; ++k) exact *= k;
        double den = 1.0;
        for (int k = 1; k <= deg + alpha + 1; ++k) den *= k;
        exact /= den;
        double got = 0.0;
        for (int i = 0; i < n; ++i) got += w[i] * std::pow(x[i], deg);
        CHECK(got == doctest::Approx(exact).epsilon(1e-13));
      }
    }
}

TEST_CASE("invalid requests are rejected") {
  CHECK_THROWS_AS(simplex_quadrature(0, 2), InvalidInput);
  CHECK_THROWS_AS(simplex_quadrature(4, 2), InvalidInput);
  CHECK_THROWS_AS(simplex_quadrature(2, -1), InvalidInput);
  CHECK_THROWS_AS(simplex_quadrature(2, 11), InvalidInput);
}

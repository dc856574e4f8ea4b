#include <doctest.h>

#include <cmath>
#include <random>

#include "stfem/problems.hpp"

using namespace stfem;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Central second-order stencils for the PDE residual
//   f - (du/dt - nu * laplace_x u)
// evaluated from the exact-solution callback alone. nu must be spatially
// constant around x (all benchmarks here satisfy that within subdomains).
double fd_residual(const ProblemData& pr, const Point& x, int sub, double h) {
  const auto& u = pr.exact->value;
  Point xp = x, xm = x;
  xp[pr.d] += h;
  xm[pr.d] -= h;
  const double dudt = (u(xp) - u(xm)) / (2.0 * h);
  double lap = 0.0;
  for (int c = 0; c < pr.d; ++c) {
    Point a = x, b = x;
    a[c] += h;
    b[c] -= h;
    lap += (u(a) - 2.0 * u(x) + u(b)) / (h * h);
  }
  return pr.source(x, sub) - (dudt - pr.nu(x, sub) * lap);
}

double fd_grad_err(const ProblemData& pr, const Point& x, double h) {
  const auto& u = pr.exact->value;
  double g[2];
  pr.exact->grad_x(x, g);
  double err = 0.0;
  for (int c = 0; c < pr.d; ++c) {
    Point a = x, b = x;
    a[c] += h;
    b[c] -= h;
    err = std::max(err, std::abs(g[c] - (u(a) - u(b)) / (2.0 * h)));
  }
  Point a = x, b = x;
  a[pr.d] += h;
  b[pr.d] -= h;
  err = std::max(err, std::abs(pr.exact->dt(x) - (u(a) - u(b)) / (2.0 * h)));
  return err;
}

}  // namespace

TEST_CASE("moving peak: pinned values and zero initial trace") {
  const auto b1 = moving_peak(1);
  CHECK(b1.problem.exact->value({0.5, 0.5, 0.0}) ==
        doctest::Approx(0.0625).epsilon(1e-14));
  const auto b2 = moving_peak(2);
  CHECK(b2.problem.exact->value({0.5, 0.5, 0.5}) ==
        doctest::Approx(-0.015625).epsilon(1e-14));

  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    CHECK(b1.problem.exact->value({u01(rng), 0.0, 0.0}) == 0.0);
    CHECK(b1.problem.initial({u01(rng), 0.0, 0.0}) == 0.0);
    // walls
    CHECK(b1.problem.exact->value({0.0, u01(rng), 0.0}) == 0.0);
    CHECK(b1.problem.exact->value({1.0, u01(rng), 0.0}) == 0.0);
  }
}

TEST_CASE("moving peak: finite-difference pde and gradient audit") {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u01(0.05, 0.95);
  for (int d = 1; d <= 2; ++d) {
    const auto b = moving_peak(d);
    for (int i = 0; i < 1000; ++i) {
      Point x{u01(rng), u01(rng), 0.0};
      if (d == 2) x[2] = u01(rng);
      const double res = fd_residual(b.problem, x, 1, 1e-4);
      const double scale =
          1.0 + std::abs(b.problem.source(x, 1)) + std::abs(b.problem.exact->dt(x));
      CHECK(std::abs(res) <= 1e-3 * scale);
      CHECK(fd_grad_err(b.problem, x, 1e-5) <= 2e-4 * scale);
    }
  }
}

TEST_CASE("smooth sine: pde audit") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u01(0.05, 0.95);
  for (int d = 1; d <= 2; ++d) {
    const auto b = smooth_sine(d);
    for (int i = 0; i < 200; ++i) {
      Point x{u01(rng), u01(rng), 0.0};
      if (d == 2) x[2] = u01(rng);
      CHECK(std::abs(fd_residual(b.problem, x, 1, 1e-5)) <= 1e-6 * 20.0);
      CHECK(fd_grad_err(b.problem, x, 1e-6) <= 1e-6 * 10.0);
    }
  }
}

TEST_CASE("polynomial patch: pde and gradient audit, boundary reproduction") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u01(0.05, 0.95);
  for (int d = 1; d <= 2; ++d)
    for (int p = 1; p <= 4; ++p) {
      const auto b = polynomial_patch(p, d);
      for (int i = 0; i < 200; ++i) {
        Point x{u01(rng), u01(rng), 0.0};
        if (d == 2) x[2] = u01(rng);
        CHECK(std::abs(fd_residual(b.problem, x, 1, 1e-5)) <= 1e-5);
        CHECK(fd_grad_err(b.problem, x, 1e-6) <= 1e-6);
      }
      // initial datum matches the exact solution at t=0
      Point x0{0.3, 0.7, 0.0};
      Point q = x0;
      q[d] = 0.0;
      CHECK(b.problem.initial(x0) == doctest::Approx(b.problem.exact->value(q)));
    }
}

TEST_CASE("kellogg: coefficient endpoints and contrast ratio") {
  const auto b = kellogg();
  const double R = 161.4476387975884;
  CHECK(b.problem.nu({0.5, 0.5, 0.0}, 1) == doctest::Approx(1.0));
  CHECK(b.problem.nu({0.5, 0.5, 1.0}, 1) == doctest::Approx(R));
  CHECK(b.problem.nu({-0.5, 0.5, 0.0}, 2) == doctest::Approx(1.0 / R));
  CHECK(b.problem.nu({-0.5, 0.5, 1.0}, 2) == doctest::Approx(1.0));
  // the contrast between the two families is exactly R at every time
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0})
    CHECK(b.problem.nu({0.5, 0.5, t}, 1) / b.problem.nu({-0.5, 0.5, t}, 2) ==
          doctest::Approx(R).epsilon(1e-14));
  CHECK(b.problem.nu_low == doctest::Approx(1.0 / R));
  CHECK(b.problem.nu_up == doctest::Approx(R));
}

TEST_CASE("kellogg: angular factor is continuous across interfaces") {
  const auto b = kellogg();
  const auto& u = b.problem.exact->value;
  for (double phi0 : {0.5 * kPi, kPi, 1.5 * kPi, 2.0 * kPi}) {
    const double r = 0.77, t = 0.9, eps = 1e-9;
    const Point a{r * std::cos(phi0 - eps), r * std::sin(phi0 - eps), t};
    const Point c{r * std::cos(phi0 + eps), r * std::sin(phi0 + eps), t};
    CHECK(u(a) == doctest::Approx(u(c)).epsilon(1e-6));
  }
}

TEST_CASE("kellogg: subdomains, zero initial trace, pde audit") {
  const auto b = kellogg();
  CHECK(b.problem.subdomain({0.5, 0.5, 0.1}) == 1);
  CHECK(b.problem.subdomain({-0.5, 0.5, 0.1}) == 2);
  CHECK(b.problem.subdomain({-0.5, -0.5, 0.1}) == 3);
  CHECK(b.problem.subdomain({0.5, -0.5, 0.1}) == 4);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> c01(0.1, 0.9), t01(0.05, 0.95);
  int tested = 0;
  for (int i = 0; i < 1000; ++i) {
    // random point safely inside a random quadrant
    const int q = static_cast<int>(rng() % 4);
    const double sx = (q == 0 || q == 3) ? 1.0 : -1.0;
    const double sy = (q == 0 || q == 1) ? 1.0 : -1.0;
    const Point x{sx * c01(rng), sy * c01(rng), t01(rng)};
    const int sub = b.problem.subdomain(x);
    CHECK(std::abs(fd_residual(b.problem, x, sub, 1e-5)) <= 2e-4);
    CHECK(fd_grad_err(b.problem, x, 1e-6) <= 1e-5);
    CHECK(b.problem.exact->value({x[0], x[1], 0.0}) == 0.0);
    ++tested;
  }
  CHECK(tested == 1000);
}

TEST_CASE("circular arc: source track, peak value, heat input") {
  const auto b = circular_arc();
  // center of the source at t=0
  const double cx = 5.0 * (1.0 + std::cos(kPi / 4.0));
  const double cy = 3.0 + 5.0 * std::sin(kPi / 4.0);
  CHECK(cx == doctest::Approx(8.5355).epsilon(1e-4));
  CHECK(cy == doctest::Approx(6.5355).epsilon(1e-4));
  CHECK(b.problem.source({cx, cy, 0.0}, 1) == doctest::Approx(2.97e5).epsilon(1e-12));
  CHECK(b.problem.initial({1.0, 2.0, 0.0}) == 20.0);
  CHECK(b.problem.bc_kind == BcKind::NeumannZero);

  // total heat input: amplitude * (pi/100) per unit time, times T=5
  const int n = 600;
  double integral = 0.0;
  const double hx = 10.0 / n;
  for (double t : {0.31, 2.17, 4.73}) {
    double slice = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        slice += b.problem.source({(i + 0.5) * hx, (j + 0.5) * hx, t}, 1);
    integral = std::max(integral, std::abs(slice * hx * hx - 2.97e5 * kPi / 100.0));
    (void)integral;
    CHECK(slice * hx * hx == doctest::Approx(2.97e5 * kPi / 100.0).epsilon(1e-3));
  }

  const auto scaled = circular_arc(2.0);
  CHECK(scaled.problem.source({cx, cy, 0.0}, 1) ==
        doctest::Approx(2.0 * 2.97e5).epsilon(1e-12));
}

TEST_CASE("friedrichs constants for boxes") {
  CHECK(box_friedrichs_constant({{0., 1.}, {0., 1.}}, 1) ==
        doctest::Approx(1.0 / kPi).epsilon(1e-14));
  CHECK(box_friedrichs_constant({{0., 1.}, {0., 1.}, {0., 1.}}, 2) ==
        doctest::Approx(1.0 / (kPi * std::sqrt(2.0))).epsilon(1e-14));
  CHECK(box_friedrichs_constant({{-1., 1.}, {-1., 1.}, {0., 1.}}, 2) ==
        doctest::Approx(std::sqrt(2.0) / kPi).epsilon(1e-14));
  CHECK(moving_peak(1).problem.c_friedrichs == doctest::Approx(1.0 / kPi));
}

TEST_CASE("benchmark factory dispatches and validates") {
  CHECK(make_benchmark("kellogg", 2, 1).name == "kellogg");
  CHECK(make_benchmark("moving_peak", 1, 2).d == 1);
  CHECK(make_benchmark("polynomial_patch", 1, 3).problem.exact.has_value());
  CHECK_THROWS_AS(make_benchmark("nope", 1, 1), ConfigError);
  CHECK_THROWS_AS(moving_peak(3), InvalidInput);
  CHECK_THROWS_AS(circular_arc(-1.0), InvalidInput);
}

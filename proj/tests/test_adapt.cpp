#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "stfem/adapt.hpp"
#include "stfem/problems.hpp"

using namespace stfem;

namespace {

IndicatorField field(std::vector<double> eta) {
  IndicatorField f;
  f.eta = std::move(eta);
  for (double e : f.eta) f.total_sq += e * e;
  return f;
}

// Independent greedy reference: descending value, ascending index on ties.
std::vector<int> greedy_oracle(const std::vector<double>& eta, double bulk) {
  std::vector<int> order(eta.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return eta[a] != eta[b] ? eta[a] > eta[b] : a < b;
  });
  double total = 0.0;
  for (int k : order) total += eta[k] * eta[k];
  std::vector<int> out;
  double acc = 0.0;
  for (int k : order) {
    if (acc >= bulk * total || eta[k] == 0.0) break;
    out.push_back(k);
    acc += eta[k] * eta[k];
  }
  std::sort(out.begin(), out.end());
  return out;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("doerfler marking: hand cases") {
  // total^2 = 30; half of it is 15 and the largest entry alone gives 16.
  auto m = doerfler_mark(field({4, 3, 2, 1}), 0.5);
  REQUIRE(m.size() == 1);
  CHECK(m[0] == 0);

  // Full bulk selects exactly the support.
  m = doerfler_mark(field({4, 3, 0, 1}), 1.0);
  CHECK(m == std::vector<int>{0, 1, 3});

  // Ties resolve by ascending element id.
  m = doerfler_mark(field({2, 2, 2, 2}), 0.5);
  CHECK(m == std::vector<int>{0, 1});

  CHECK(doerfler_mark(field({0, 0, 0}), 0.25).empty());
  CHECK(doerfler_mark(field({}), 0.25).empty());

  CHECK_THROWS_AS(doerfler_mark(field({1, 2}), 0.0), InvalidInput);
  CHECK_THROWS_AS(doerfler_mark(field({1, 2}), 1.5), InvalidInput);
  CHECK_THROWS_AS(doerfler_mark(field({1, -2}), 0.5), InvalidInput);
}

TEST_CASE("doerfler marking: random vectors against the sort oracle") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double bulk : {0.1, 0.25, 0.5, 1.0}) {
    for (int trial = 0; trial < 12; ++trial) {
      std::vector<double> eta(1000);
      for (double& e : eta) {
        const double u = unit(rng);
        e = u < 0.1 ? 0.0 : std::pow(u, 4.0);  // some zeros, wide spread
      }
      IndicatorField ind = field(eta);
      const auto mine = doerfler_mark(ind, bulk);
      CHECK(mine == greedy_oracle(eta, bulk));

      // The bulk inequality itself, without slack.
      double sum_marked = 0.0, total = 0.0;
      for (int k : mine) sum_marked += eta[k] * eta[k];
      for (double e : eta) total += e * e;
      CHECK(sum_marked >= bulk * total * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("transfer_solution: nested interpolation is exact") {
  const auto coarse_mesh = box_mesh(1, {{0, 1}, {0, 1}}, {2, 2});
  FESpace coarse(coarse_mesh, 2, {});

  std::vector<int> some(coarse_mesh.num_elements() / 2);
  std::iota(some.begin(), some.end(), 0);
  const auto fine_mesh = refine_marked(coarse_mesh, some);
  FESpace fine(fine_mesh, 2, {});

  // Constants survive untouched.
  std::vector<double> ones(coarse.n_total(), 1.0);
  auto t = transfer_solution(coarse, fine, ones);
  for (double v : t) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

  // Any member of the coarse space transfers exactly; audit at the fine
  // Lagrange nodes and at random interior points.
  std::vector<double> u = coarse.interpolate([](const Point& x) {
    return 0.5 + x[0] * x[0] - 2.0 * x[0] * x[1] + 3.0 * x[1];
  });
  auto uf = transfer_solution(coarse, fine, u);
  std::vector<double> want = fine.interpolate([](const Point& x) {
    return 0.5 + x[0] * x[0] - 2.0 * x[0] * x[1] + 3.0 * x[1];
  });
  for (int i = 0; i < fine.n_total(); ++i) {
    CHECK(uf[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> randu(coarse.n_total());
  for (double& v : randu) v = unit(rng);
  auto rf = transfer_solution(coarse, fine, randu);
  const auto& parents = fine_mesh.parents();
  for (int trial = 0; trial < 100; ++trial) {
    const int k = static_cast<int>(unit(rng) * fine_mesh.num_elements());
    Point xi{unit(rng), unit(rng), 0.0};
    if (xi[0] + xi[1] > 1.0) {
      xi[0] = 1.0 - xi[0];
      xi[1] = 1.0 - xi[1];
    }
    const Point x = affine_map(fine_mesh, k).to_physical(xi);
    const double a = fine.eval(rf, k, xi);
    const double b = coarse.eval(randu, parents[k],
                                 affine_map(coarse_mesh, parents[k]).to_reference(x));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("transfer_solution rejects unrelated meshes") {
  const auto mesh_a = box_mesh(1, {{0, 1}, {0, 1}}, {2, 2});
  const auto mesh_b = box_mesh(1, {{2, 3}, {0, 1}}, {2, 2});
  FESpace a(mesh_a, 1, {});
  FESpace b(mesh_b, 1, {});
  std::vector<double> u(a.n_total(), 0.0);

  // No ancestry at all.
  CHECK_THROWS_AS(transfer_solution(a, b, u), InvalidInput);

  // Ancestry ids exist but the geometry lies outside the coarse elements.
  const auto fine_b = refine_uniform(mesh_b);
  FESpace fb(fine_b, 1, {});
  CHECK_THROWS_AS(transfer_solution(a, fb, u), InvalidInput);

  const auto fine_a = refine_uniform(mesh_a);
  FESpace fa(fine_a, 2, {});
  CHECK_THROWS_AS(transfer_solution(a, fa, u), InvalidInput);  // degree mismatch

  std::vector<double> short_u(a.n_total() - 1, 0.0);
  FESpace fa1(fine_a, 1, {});
  CHECK_THROWS_AS(transfer_solution(a, fa1, short_u), InvalidInput);
}

TEST_CASE("uniform loop on a smooth problem: first-order rate, reliable majorant") {
  Benchmark bench = smooth_sine(1);
  AdaptConfig cfg;
  cfg.mode = RefinementMode::Uniform;
  cfg.estimator = IndicatorKind::Functional;
  cfg.max_levels = 5;

  AdaptResult res = adaptive_loop(bench, 1, cfg, {4, 4});
  REQUIRE(res.records.size() == 5);
  CHECK(!res.aborted);

  std::vector<double> lh, le;
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const ErrorRecord& r = res.records[i];
    CHECK(r.level == static_cast<int>(i));
    REQUIRE(r.h_err.has_value());
    REQUIRE(r.para_err.has_value());
    REQUIRE(r.majorant.has_value());
    REQUIRE(r.eta_total.has_value());
    REQUIRE(r.i_eff.has_value());
    CHECK(*r.majorant >= *r.para_err);
    CHECK(*r.i_eff ==
          doctest::Approx(*r.eta_total / *r.h_err).epsilon(1e-12));
    if (i > 0) {
      CHECK(r.dofs > res.records[i - 1].dofs);
      CHECK(*r.h_err < *res.records[i - 1].h_err);
    }
    lh.push_back(std::log(r.h_max));
    le.push_back(std::log(*r.h_err));
  }
  CHECK(fit_slope(lh, le) == doctest::Approx(1.0).epsilon(0.3));

  // Final state mirrors the last record.
  FESpace space(res.mesh, 1, {BoundaryTag::Lateral});
  CHECK(space.n_free() == res.records.back().dofs);
  CHECK(static_cast<int>(res.solution.size()) == space.n_total());
}

TEST_CASE("nested iterations reproduce the plain adaptive run") {
  Benchmark bench = smooth_sine(1);
  AdaptConfig plain;
  plain.mode = RefinementMode::Adaptive;
  plain.estimator = IndicatorKind::Functional;
  plain.bulk = 0.5;
  plain.max_levels = 5;
  plain.solver.rel_tol = 1e-10;

  AdaptConfig ni = plain;
  ni.nested_iterations = true;
  ni.ni_rel_tol = 1e-10;

  AdaptResult a = adaptive_loop(bench, 1, plain, {3, 3});
  AdaptResult b = adaptive_loop(bench, 1, ni, {3, 3});
  REQUIRE(a.records.size() == b.records.size());
  int iters_a = 0, iters_b = 0;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].dofs == b.records[i].dofs);
    iters_a += a.records[i].gmres_iters;
    iters_b += b.records[i].gmres_iters;
  }
  CHECK(a.mesh.num_elements() == b.mesh.num_elements());
  CHECK(iters_b <= iters_a + 2);  // warm starts never cost extra work

  REQUIRE(a.solution.size() == b.solution.size());
  double diff = 0.0;
  for (std::size_t i = 0; i < a.solution.size(); ++i) {
    diff = std::max(diff, std::abs(a.solution[i] - b.solution[i]));
  }
  CHECK(diff <= 1e-6);
}

TEST_CASE("adaptive refinement chases the checkerboard singularity") {
  Benchmark bench = kellogg();
  AdaptConfig cfg;
  cfg.mode = RefinementMode::Adaptive;
  cfg.estimator = IndicatorKind::Residual;
  cfg.bulk = 0.25;
  cfg.max_levels = 8;

  AdaptResult res = adaptive_loop(bench, 1, cfg, {2, 2, 2});
  REQUIRE(res.records.size() == 8);
  for (std::size_t i = 1; i < res.records.size(); ++i) {
    CHECK(res.records[i].dofs > res.records[i - 1].dofs);
  }

  // The singular line is {x = y = 0} x (0,T): cells nearby must end up much
  // smaller than cells far away.
  double near = 1e300, far = 1e300;
  for (int k = 0; k < res.mesh.num_elements(); ++k) {
    Point c{0, 0, 0};
    for (int i = 0; i <= res.mesh.dim(); ++i) {
      const Point v = res.mesh.elem_vertex_coords(k, i);
      for (int r = 0; r < 3; ++r) c[r] += v[r] / (res.mesh.dim() + 1);
    }
    const double r = std::hypot(c[0], c[1]);
    const double h = res.mesh.element_diameter(k);
    if (r < 0.2) near = std::min(near, h);
    if (r > 0.6) far = std::min(far, h);
  }
  CHECK(near < 0.6 * far);
}

TEST_CASE("stopping rules and solver-failure diagnostics") {
  Benchmark bench = smooth_sine(1);

  AdaptConfig cfg;
  cfg.mode = RefinementMode::Uniform;
  cfg.max_dofs = 50;
  AdaptResult res = adaptive_loop(bench, 1, cfg, {2, 2});
  REQUIRE(!res.records.empty());
  CHECK(res.records.back().dofs >= 50);
  for (std::size_t i = 0; i + 1 < res.records.size(); ++i) {
    CHECK(res.records[i].dofs < 50);
  }

  cfg.max_dofs = 2000000;
  cfg.max_levels = 1;
  res = adaptive_loop(bench, 1, cfg, {2, 2});
  CHECK(res.records.size() == 1);

  AdaptConfig bad = cfg;
  bad.max_levels = 3;
  bad.solver.precond = Preconditioner::None;
  bad.solver.restart = 2;
  bad.solver.max_iters = 2;
  bad.solver.rel_tol = 1e-16;
  res = adaptive_loop(bench, 1, bad, {3, 3});
  CHECK(res.aborted);
  CHECK(res.records.size() == 1);
  CHECK(!res.records[0].h_err.has_value());
  CHECK(res.abort_reason.find("level 0") != std::string::npos);

  CHECK_THROWS_AS(adaptive_loop(bench, 1, AdaptConfig{.max_levels = 0}, {2, 2}),
                  InvalidInput);
  CHECK_THROWS_AS(adaptive_loop(bench, 1, AdaptConfig{.bulk = 1.5}, {2, 2}),
                  InvalidInput);
}

#include "stfem/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <utility>

namespace stfem {

namespace {

std::vector<BoundaryTag> dirichlet_tags(const ProblemData& problem) {
  if (problem.bc_kind == BcKind::Dirichlet) return {BoundaryTag::Lateral};
  return {};
}

/// Containment audit: every vertex of the fine element must map into the
/// reference simplex of its recorded ancestor.
void check_nested(const SpaceTimeMesh& coarse, const SpaceTimeMesh& fine) {
  const auto& parents = fine.parents();
  if (static_cast<int>(parents.size()) != fine.num_elements()) {
    throw InvalidInput("transfer_solution: fine mesh has no refinement ancestry");
  }
  const int dim = fine.dim();
  for (int k = 0; k < fine.num_elements(); ++k) {
    const int pk = parents[k];
    if (pk < 0 || pk >= coarse.num_elements()) {
      throw InvalidInput("transfer_solution: ancestor ids do not match the coarse mesh");
    }
    const ElementMap map = affine_map(coarse, pk);
    for (int i = 0; i <= dim; ++i) {
      const Point xi = map.to_reference(fine.elem_vertex_coords(k, i));
      double s = 0.0;
      for (int r = 0; r < dim; ++r) {
        if (xi[r] < -1e-8) {
          throw InvalidInput("transfer_solution: meshes are not nested");
        }
        s += xi[r];
      }
      if (s > 1.0 + 1e-8) {
        throw InvalidInput("transfer_solution: meshes are not nested");
      }
    }
  }
}

double now_between(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

std::vector<int> doerfler_mark(const IndicatorField& indicator, double bulk) {
  if (!(bulk > 0.0) || bulk > 1.0) {
    throw InvalidInput("doerfler_mark: bulk parameter outside (0,1]");
  }
  const int n = static_cast<int>(indicator.eta.size());
  for (double e : indicator.eta) {
    if (!(e >= 0.0)) throw InvalidInput("doerfler_mark: negative indicator entry");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (indicator.eta[a] != indicator.eta[b]) {
      return indicator.eta[a] > indicator.eta[b];
    }
    return a < b;
  });

  // Accumulate the threshold from the same descending sequence as the prefix
  // sums so the bulk inequality holds without floating-point slack.
  double total_sq = 0.0;
  for (int k : order) total_sq += sqr(indicator.eta[k]);
  const double target = bulk * total_sq;

  std::vector<int> marked;
  double acc = 0.0;
  for (int k : order) {
    if (acc >= target || indicator.eta[k] == 0.0) break;
    marked.push_back(k);
    acc += sqr(indicator.eta[k]);
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

std::vector<double> transfer_solution(const FESpace& coarse, const FESpace& fine,
                                      const std::vector<double>& coarse_coeffs) {
  if (static_cast<int>(coarse_coeffs.size()) != coarse.n_total()) {
    throw InvalidInput("transfer_solution: coefficient vector size mismatch");
  }
  if (coarse.degree() != fine.degree()) {
    throw InvalidInput("transfer_solution: spaces have different degrees");
  }
  check_nested(coarse.mesh(), fine.mesh());

  const auto& parents = fine.mesh().parents();
  const int dim = fine.mesh().dim();
  const int p = fine.degree();
  const int nloc = fine.n_local();
  const auto& nodes = lagrange_nodes(dim, p);

  std::vector<double> out(fine.n_total(), 0.0);
  std::vector<std::uint8_t> seen(fine.n_total(), 0);
  for (int k = 0; k < fine.mesh().num_elements(); ++k) {
    const ElementMap fine_map = affine_map(fine.mesh(), k);
    const ElementMap coarse_map = affine_map(coarse.mesh(), parents[k]);
    const auto dofs = fine.element_dofs(k);
    for (int i = 0; i < nloc; ++i) {
      if (seen[dofs[i]]) continue;
      seen[dofs[i]] = 1;
      Point xi{0.0, 0.0, 0.0};
      for (int r = 0; r < dim; ++r) {
        xi[r] = static_cast<double>(nodes[i][r + 1]) / p;
      }
      const Point x = fine_map.to_physical(xi);
      out[dofs[i]] =
          coarse.eval(coarse_coeffs, parents[k], coarse_map.to_reference(x));
    }
  }
  return out;
}

AdaptResult adaptive_loop(const Benchmark& bench, int degree,
                          const AdaptConfig& cfg,
                          const std::vector<int>& subdivisions,
                          const LevelCallback& on_level) {
  if (cfg.max_dofs < 1 || cfg.max_levels < 1) {
    throw InvalidInput("adaptive_loop: max_dofs and max_levels must be positive");
  }
  if (!(cfg.bulk > 0.0) || cfg.bulk > 1.0) {
    throw InvalidInput("adaptive_loop: bulk parameter outside (0,1]");
  }

  const ProblemData& problem = bench.problem;
  const auto tags = dirichlet_tags(problem);
  const int bump = bench.quad_bump;
  const int vol_order =
      cfg.quad_order > 0 ? cfg.quad_order : 2 * degree + 2 + bump;
  const int err_order =
      cfg.quad_order > 0 ? cfg.quad_order : 2 * degree + 4 + bump;

  AdaptResult result{
      {}, box_mesh(bench.d,
                   bench.extents,
                   subdivisions.empty() ? bench.default_subdivisions : subdivisions,
                   problem.subdomain),
      {}, false, ""};

  std::vector<double> guess;
  for (int level = 0; level < cfg.max_levels; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    FESpace space(result.mesh, degree, tags);

    StabilizationParams stab =
        compute_stabilization(space, problem, cfg.stabilization);
    SparseSystem sys = assemble(space, problem, stab, vol_order);

    SolverConfig scfg = cfg.solver;
    std::vector<double> x;
    if (cfg.nested_iterations && !guess.empty()) {
      x = std::move(guess);
      guess.clear();
      scfg.rel_tol = cfg.ni_rel_tol;
    }
    const SolveReport rep = gmres(sys.matrix, sys.rhs, x, scfg);

    ErrorRecord rec;
    rec.level = level;
    rec.dofs = space.n_free();
    rec.h_max = result.mesh.h_max();
    rec.gmres_iters = rep.iterations;

    if (!rep.converged) {
      rec.wall_s = now_between(t0);
      result.records.push_back(rec);
      if (on_level) on_level({level, result.mesh, space, x, nullptr, rec});
      result.solution = std::move(x);
      result.aborted = true;
      result.abort_reason = "solver did not converge on level " +
                            std::to_string(level);
      return result;
    }

    if (problem.exact) {
      const double err = energy_error(space, problem, stab, x, err_order).norm_h();
      const std::vector<double> zero(space.n_total(), 0.0);
      const double scale =
          energy_error(space, problem, stab, zero, err_order).norm_h();
      rec.h_err = err;
      if (scale > 0.0) rec.h_err_rel = err / scale;
      rec.para_err = parabolic_error(space, problem, x, cfg.delta, err_order);
    }

    IndicatorField indicator;
    std::optional<MajorantState> mstate;
    if (cfg.estimator == IndicatorKind::Residual) {
      indicator = residual_indicator(space, problem, x, vol_order);
    } else {
      FluxField y = recover_flux(space, problem, x, cfg.recovery);
      const double beta0 =
          optimize_beta(space, problem, x, y, cfg.literal_beta, vol_order);
      FluxImproveConfig icfg = cfg.improve;
      if (icfg.quad_order <= 0) icfg.quad_order = vol_order;
      y = improve_flux(space, problem, x, beta0, y, icfg);
      const double beta1 =
          optimize_beta(space, problem, x, y, cfg.literal_beta, vol_order);
      mstate = majorant(space, problem, x, y, beta1, cfg.delta, vol_order);
      indicator = functional_indicator(space, problem, x, y, vol_order);
    }
    rec.eta_total = indicator.total();
    if (mstate) rec.majorant = mstate->value();
    if (rec.h_err) rec.i_eff = efficiency_index(indicator, *rec.h_err);
    rec.wall_s = now_between(t0);
    result.records.push_back(rec);
    if (on_level) on_level({level, result.mesh, space, x, &indicator, rec});

    result.solution = std::move(x);
    if (rec.dofs >= cfg.max_dofs || level + 1 == cfg.max_levels) break;

    SpaceTimeMesh next = result.mesh;
    try {
      if (cfg.mode == RefinementMode::Uniform) {
        next = refine_uniform(result.mesh);
      } else {
        const std::vector<int> marked = doerfler_mark(indicator, cfg.bulk);
        if (marked.empty()) break;  // estimator is identically zero
        next = refine_marked(result.mesh, marked);
      }
    } catch (const std::exception& e) {
      result.aborted = true;
      result.abort_reason = std::string("refinement failed: ") + e.what();
      return result;
    }

    if (cfg.nested_iterations) {
      FESpace fine(next, degree, tags);
      guess = transfer_solution(space, fine, result.solution);
    }
    result.mesh = std::move(next);
  }
  return result;
}

}  // namespace stfem

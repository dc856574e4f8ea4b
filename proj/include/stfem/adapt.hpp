#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stfem/assembly.hpp"
#include "stfem/estimate.hpp"
#include "stfem/fespace.hpp"
#include "stfem/linalg.hpp"
#include "stfem/mesh.hpp"
#include "stfem/problems.hpp"

namespace stfem {

enum class RefinementMode { Uniform, Adaptive };

/// Knobs of the solve-estimate-mark-refine loop.
struct AdaptConfig {
  RefinementMode mode = RefinementMode::Adaptive;
  IndicatorKind estimator = IndicatorKind::Functional;
  double bulk = 0.25;  ///< Doerfler parameter, in (0,1]

  long max_dofs = 2000000;
  int max_levels = 25;

  SolverConfig solver;
  /// Start each solve from the interpolated previous-level solution and only
  /// ask for the relaxed residual reduction below.
  bool nested_iterations = false;
  double ni_rel_tol = 1e-2;

  StabilizationConfig stabilization;
  double delta = 1.0;  ///< weight of the parabolic error distance
  bool literal_beta = false;
  FluxRecoveryConfig recovery;
  FluxImproveConfig improve;
  /// Override for every quadrature order used in the loop; -1 picks the
  /// operation defaults plus the benchmark's steep-data bump.
  int quad_order = -1;
};

/// One measured refinement level. Error columns stay empty when the problem
/// has no exact solution; the majorant column is filled by functional runs.
struct ErrorRecord {
  int level = 0;
  long dofs = 0;  ///< free dofs of the level
  double h_max = 0.0;
  std::optional<double> h_err;
  std::optional<double> h_err_rel;
  std::optional<double> para_err;
  std::optional<double> eta_total;
  std::optional<double> majorant;
  std::optional<double> i_eff;
  int gmres_iters = 0;
  double wall_s = 0.0;
};

/// Everything a per-level observer may want to export.
struct LevelView {
  int level;
  const SpaceTimeMesh& mesh;
  const FESpace& space;
  const std::vector<double>& solution;
  const IndicatorField* indicator;  ///< null when the solve failed
  const ErrorRecord& record;
};
using LevelCallback = std::function<void(const LevelView&)>;

struct AdaptResult {
  std::vector<ErrorRecord> records;
  SpaceTimeMesh mesh;            ///< mesh of the last completed level
  std::vector<double> solution;  ///< coefficients on that mesh
  bool aborted = false;
  std::string abort_reason;
};

/// Smallest index set M (exact sort, greedy prefix, ties by ascending
/// element id) with bulk * total^2 <= sum_{K in M} eta_K^2. An all-zero
/// indicator yields the empty set. Returns ascending element ids.
std::vector<int> doerfler_mark(const IndicatorField& indicator, double bulk);

/// Nodal interpolation of a coarse FE function onto a space over a mesh that
/// `refine_marked`/`refine_uniform` produced from the coarse mesh. Exact for
/// members of the coarse space.
std::vector<double> transfer_solution(const FESpace& coarse, const FESpace& fine,
                                      const std::vector<double>& coarse_coeffs);

/// Runs the loop on the benchmark's box domain until max_dofs or max_levels.
/// `subdivisions` overrides the benchmark's initial grid when nonempty.
AdaptResult adaptive_loop(const Benchmark& bench, int degree,
                          const AdaptConfig& cfg,
                          const std::vector<int>& subdivisions = {},
                          const LevelCallback& on_level = nullptr);

}  // namespace stfem

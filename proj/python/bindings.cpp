#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <optional>
#include <sstream>

#include "stfem/adapt.hpp"
#include "stfem/cli_io.hpp"

namespace py = pybind11;
using namespace stfem;

namespace {

SpaceTimeMesh make_mesh(const Benchmark& bench, const std::vector<int>& subdivisions) {
  return box_mesh(bench.d, bench.extents,
                  subdivisions.empty() ? bench.default_subdivisions : subdivisions,
                  bench.problem.subdomain);
}

FluxRecoveryConfig recovery_config(bool volume_weighted) {
  FluxRecoveryConfig cfg;
  cfg.volume_weighted = volume_weighted;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_stfem, m) {
  m.doc() = "Space-time finite elements for parabolic problems";
  m.attr("__version__") = "0.1.0";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  py::enum_<RefinementMode>(m, "RefinementMode")
      .value("UNIFORM", RefinementMode::Uniform)
      .value("ADAPTIVE", RefinementMode::Adaptive);
  py::enum_<IndicatorKind>(m, "IndicatorKind")
      .value("RESIDUAL", IndicatorKind::Residual)
      .value("FUNCTIONAL", IndicatorKind::Functional);
  py::enum_<StabilizationMode>(m, "StabilizationMode")
      .value("LEMMA1", StabilizationMode::Lemma1)
      .value("CONSTANT_SCALED", StabilizationMode::ConstantScaled);
  py::enum_<Preconditioner>(m, "Preconditioner")
      .value("NONE", Preconditioner::None)
      .value("JACOBI", Preconditioner::Jacobi)
      .value("ILU0", Preconditioner::Ilu0);

  py::class_<SpaceTimeMesh>(m, "SpaceTimeMesh")
      .def_property_readonly("dim", &SpaceTimeMesh::dim)
      .def_property_readonly("num_vertices", &SpaceTimeMesh::num_vertices)
      .def_property_readonly("num_elements", &SpaceTimeMesh::num_elements)
      .def_property_readonly("num_facets", &SpaceTimeMesh::num_facets)
      .def("vertex", &SpaceTimeMesh::vertex)
      .def("element_volume", &SpaceTimeMesh::element_volume)
      .def("element_diameter", &SpaceTimeMesh::element_diameter)
      .def("element_subdomain",
           [](const SpaceTimeMesh& mesh, int k) { return mesh.element(k).subdomain; })
      .def_property_readonly("h_max", &SpaceTimeMesh::h_max)
      .def_property_readonly("h_min", &SpaceTimeMesh::h_min)
      .def_property_readonly("total_volume", &SpaceTimeMesh::total_volume)
      .def_property_readonly("t_min", &SpaceTimeMesh::t_min)
      .def_property_readonly("t_max", &SpaceTimeMesh::t_max)
      .def("parents", [](const SpaceTimeMesh& mesh) { return mesh.parents(); })
      .def("__repr__", [](const SpaceTimeMesh& mesh) {
        std::ostringstream os;
        os << "SpaceTimeMesh(dim=" << mesh.dim() << ", vertices="
           << mesh.num_vertices() << ", elements=" << mesh.num_elements() << ")";
        return os.str();
      });

  py::class_<MeshAudit>(m, "MeshAudit")
      .def_readonly("conforming", &MeshAudit::conforming)
      .def_readonly("positive_volumes", &MeshAudit::positive_volumes)
      .def_readonly("boundary_closed", &MeshAudit::boundary_closed)
      .def_readonly("volume", &MeshAudit::volume)
      .def_readonly("min_shape_ratio", &MeshAudit::min_shape_ratio)
      .def_readonly("n_lateral", &MeshAudit::n_lateral)
      .def_readonly("n_bottom", &MeshAudit::n_bottom)
      .def_readonly("n_top", &MeshAudit::n_top)
      .def_readonly("detail", &MeshAudit::detail)
      .def("ok", &MeshAudit::ok);

  m.def("box_mesh",
        [](int d, const std::vector<std::pair<double, double>>& extents,
           const std::vector<int>& subdivisions) {
          return box_mesh(d, extents, subdivisions);
        },
        py::arg("d"), py::arg("extents"), py::arg("subdivisions"));
  m.def("refine_uniform", &refine_uniform);
  m.def("refine_marked", &refine_marked);
  m.def("audit_mesh", &audit_mesh);
  m.def("read_mesh", &read_mesh_file, py::arg("path"));
  m.def("write_mesh",
        [](const std::string& path, const SpaceTimeMesh& mesh) {
          write_mesh_file(path, mesh);
        },
        py::arg("path"), py::arg("mesh"));

  py::class_<Benchmark>(m, "Benchmark")
      .def_readonly("name", &Benchmark::name)
      .def_readonly("d", &Benchmark::d)
      .def_readonly("extents", &Benchmark::extents)
      .def_readonly("default_subdivisions", &Benchmark::default_subdivisions)
      .def_readonly("quad_bump", &Benchmark::quad_bump)
      .def_property_readonly(
          "has_exact",
          [](const Benchmark& b) { return b.problem.exact.has_value(); })
      .def_property_readonly(
          "c_friedrichs",
          [](const Benchmark& b) { return b.problem.c_friedrichs; })
      .def("exact_value",
           [](const Benchmark& b, const Point& x) {
             if (!b.problem.exact) {
               throw InvalidInput("benchmark has no exact solution");
             }
             return b.problem.exact->value(x);
           })
      .def("__repr__", [](const Benchmark& b) {
        return "Benchmark('" + b.name + "', d=" + std::to_string(b.d) + ")";
      });
  m.def("make_benchmark", &make_benchmark, py::arg("name"), py::arg("d") = 1,
        py::arg("degree") = 1, py::arg("scale") = 1.0);
  m.def("make_mesh", &make_mesh, py::arg("benchmark"),
        py::arg("subdivisions") = std::vector<int>(),
        "Benchmark's box mesh with its subdomain classifier applied.");

  py::class_<FESpace>(m, "FESpace")
      .def(py::init([](const SpaceTimeMesh& mesh, int degree, bool dirichlet_lateral) {
             std::vector<BoundaryTag> tags;
             if (dirichlet_lateral) tags.push_back(BoundaryTag::Lateral);
             return FESpace(mesh, degree, tags);
           }),
           py::arg("mesh"), py::arg("degree"), py::arg("dirichlet_lateral") = true,
           py::keep_alive<1, 2>())
      .def_property_readonly("degree", &FESpace::degree)
      .def_property_readonly("n_total", &FESpace::n_total)
      .def_property_readonly("n_free", &FESpace::n_free)
      .def_property_readonly("n_local", &FESpace::n_local)
      .def("dof_coords", &FESpace::dof_coords)
      .def("constrained", &FESpace::constrained)
      .def("interpolate",
           [](const FESpace& space, const std::function<double(const Point&)>& g) {
             return space.interpolate(g);
           })
      .def("eval",
           [](const FESpace& space, const std::vector<double>& coeffs, int elem,
              const Point& xi) { return space.eval(coeffs, elem, xi); });

  py::class_<StabilizationConfig>(m, "StabilizationConfig")
      .def(py::init<>())
      .def_readwrite("mode", &StabilizationConfig::mode)
      .def_readwrite("theta0", &StabilizationConfig::theta0)
      .def_readwrite("quad_order", &StabilizationConfig::quad_order);
  py::class_<StabilizationParams>(m, "StabilizationParams")
      .def_readonly("mode", &StabilizationParams::mode)
      .def_readonly("theta", &StabilizationParams::theta)
      .def_readonly("c_inv", &StabilizationParams::c_inv)
      .def_readonly("fallback_count", &StabilizationParams::fallback_count);
  m.def("compute_stabilization",
        [](const FESpace& space, const Benchmark& bench,
           const StabilizationConfig& cfg) {
          return compute_stabilization(space, bench.problem, cfg);
        },
        py::arg("space"), py::arg("benchmark"),
        py::arg("config") = StabilizationConfig());

  py::class_<SparseSystem>(m, "SparseSystem")
      .def_property_readonly("n", [](const SparseSystem& s) { return s.matrix.n; })
      .def_property_readonly("nnz", [](const SparseSystem& s) { return s.matrix.nnz(); })
      .def_readonly("rhs", &SparseSystem::rhs);
  m.def("assemble",
        [](const FESpace& space, const Benchmark& bench,
           const StabilizationParams& stab, int quad_order) {
          return assemble(space, bench.problem, stab, quad_order);
        },
        py::arg("space"), py::arg("benchmark"), py::arg("stabilization"),
        py::arg("quad_order") = -1);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("precond", &SolverConfig::precond)
      .def_readwrite("restart", &SolverConfig::restart)
      .def_readwrite("rel_tol", &SolverConfig::rel_tol)
      .def_readwrite("max_iters", &SolverConfig::max_iters);
  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("restarts", &SolveReport::restarts)
      .def_readonly("initial_residual", &SolveReport::initial_residual)
      .def_readonly("final_residual", &SolveReport::final_residual)
      .def_readonly("converged", &SolveReport::converged)
      .def_readonly("precond_fallback", &SolveReport::precond_fallback);
  m.def("gmres",
        [](const SparseSystem& system, const SolverConfig& cfg,
           std::vector<double> guess) {
          SolveReport report = gmres(system.matrix, system.rhs, guess, cfg);
          return py::make_tuple(guess, report);
        },
        py::arg("system"), py::arg("config") = SolverConfig(),
        py::arg("guess") = std::vector<double>(),
        "Solve the assembled system; returns (coefficients, report).");

  py::class_<EnergyBreakdown>(m, "EnergyBreakdown")
      .def_readonly("grad_sq", &EnergyBreakdown::grad_sq)
      .def_readonly("grad_plain_sq", &EnergyBreakdown::grad_plain_sq)
      .def_readonly("time_sq", &EnergyBreakdown::time_sq)
      .def_readonly("l2_scaled_sq", &EnergyBreakdown::l2_scaled_sq)
      .def_readonly("operator_sq", &EnergyBreakdown::operator_sq)
      .def_readonly("trace_T_sq", &EnergyBreakdown::trace_T_sq)
      .def_readonly("trace_0_sq", &EnergyBreakdown::trace_0_sq)
      .def("norm_h", &EnergyBreakdown::norm_h)
      .def("norm_h_bar", &EnergyBreakdown::norm_h_bar)
      .def("norm_h_star", &EnergyBreakdown::norm_h_star);
  m.def("energy_norms",
        [](const FESpace& space, const Benchmark& bench,
           const StabilizationParams& stab, const std::vector<double>& coeffs) {
          return energy_norms(space, bench.problem, stab, coeffs);
        });
  m.def("energy_error",
        [](const FESpace& space, const Benchmark& bench,
           const StabilizationParams& stab, const std::vector<double>& coeffs) {
          return energy_error(space, bench.problem, stab, coeffs);
        });

  py::class_<IndicatorField>(m, "IndicatorField")
      .def_readonly("kind", &IndicatorField::kind)
      .def_readonly("eta", &IndicatorField::eta)
      .def_readonly("total_sq", &IndicatorField::total_sq)
      .def("total", &IndicatorField::total);
  py::class_<FluxField>(m, "FluxField")
      .def_readonly("d", &FluxField::d)
      .def_readonly("coeffs", &FluxField::coeffs);
  py::class_<MajorantState>(m, "MajorantState")
      .def_readonly("beta", &MajorantState::beta)
      .def_readonly("delta", &MajorantState::delta)
      .def_readonly("initial_sq", &MajorantState::initial_sq)
      .def_readonly("flux_sq", &MajorantState::flux_sq)
      .def_readonly("eq_sq", &MajorantState::eq_sq)
      .def_readonly("value_sq", &MajorantState::value_sq)
      .def("value", &MajorantState::value);

  m.def("residual_indicator",
        [](const FESpace& space, const Benchmark& bench,
           const std::vector<double>& u) {
          return residual_indicator(space, bench.problem, u);
        });
  m.def("recover_flux",
        [](const FESpace& space, const Benchmark& bench,
           const std::vector<double>& u, bool volume_weighted) {
          return recover_flux(space, bench.problem, u, recovery_config(volume_weighted));
        },
        py::arg("space"), py::arg("benchmark"), py::arg("coeffs"),
        py::arg("volume_weighted") = false);
  m.def("optimal_beta", &optimal_beta, py::arg("flux_sq"), py::arg("eq_sq"),
        py::arg("c_friedrichs"), py::arg("literal") = false);
  m.def("optimize_beta",
        [](const FESpace& space, const Benchmark& bench,
           const std::vector<double>& u, const FluxField& y, bool literal) {
          return optimize_beta(space, bench.problem, u, y, literal);
        },
        py::arg("space"), py::arg("benchmark"), py::arg("coeffs"), py::arg("flux"),
        py::arg("literal") = false);
  m.def("improve_flux",
        [](const FESpace& space, const Benchmark& bench,
           const std::vector<double>& u, double beta, const FluxField& y,
           int cg_iters, double cg_tol) {
          FluxImproveConfig cfg;
          cfg.cg_iters = cg_iters;
          cfg.cg_tol = cg_tol;
          return improve_flux(space, bench.problem, u, beta, y, cfg);
        },
        py::arg("space"), py::arg("benchmark"), py::arg("coeffs"), py::arg("beta"),
        py::arg("flux"), py::arg("cg_iters") = 10, py::arg("cg_tol") = 1e-2);
  m.def("majorant",
        [](const FESpace& space, const Benchmark& bench,
           const std::vector<double>& u, const FluxField& y, double beta,
           double delta) {
          return majorant(space, bench.problem, u, y, beta, delta);
        },
        py::arg("space"), py::arg("benchmark"), py::arg("coeffs"), py::arg("flux"),
        py::arg("beta"), py::arg("delta") = 1.0);
  m.def("functional_indicator",
        [](const FESpace& space, const Benchmark& bench,
           const std::vector<double>& u, const FluxField& y) {
          return functional_indicator(space, bench.problem, u, y);
        });
  m.def("parabolic_error",
        [](const FESpace& space, const Benchmark& bench,
           const std::vector<double>& u, double delta) {
          return parabolic_error(space, bench.problem, u, delta);
        },
        py::arg("space"), py::arg("benchmark"), py::arg("coeffs"),
        py::arg("delta") = 1.0);
  m.def("efficiency_index", &efficiency_index, py::arg("indicator"),
        py::arg("energy_error"));

  py::class_<FluxRecoveryConfig>(m, "FluxRecoveryConfig")
      .def(py::init<>())
      .def_readwrite("volume_weighted", &FluxRecoveryConfig::volume_weighted);
  py::class_<FluxImproveConfig>(m, "FluxImproveConfig")
      .def(py::init<>())
      .def_readwrite("cg_iters", &FluxImproveConfig::cg_iters)
      .def_readwrite("cg_tol", &FluxImproveConfig::cg_tol)
      .def_readwrite("quad_order", &FluxImproveConfig::quad_order);

  py::class_<AdaptConfig>(m, "AdaptConfig")
      .def(py::init<>())
      .def_readwrite("mode", &AdaptConfig::mode)
      .def_readwrite("estimator", &AdaptConfig::estimator)
      .def_readwrite("bulk", &AdaptConfig::bulk)
      .def_readwrite("max_dofs", &AdaptConfig::max_dofs)
      .def_readwrite("max_levels", &AdaptConfig::max_levels)
      .def_readwrite("solver", &AdaptConfig::solver)
      .def_readwrite("nested_iterations", &AdaptConfig::nested_iterations)
      .def_readwrite("ni_rel_tol", &AdaptConfig::ni_rel_tol)
      .def_readwrite("stabilization", &AdaptConfig::stabilization)
      .def_readwrite("delta", &AdaptConfig::delta)
      .def_readwrite("literal_beta", &AdaptConfig::literal_beta)
      .def_readwrite("recovery", &AdaptConfig::recovery)
      .def_readwrite("improve", &AdaptConfig::improve)
      .def_readwrite("quad_order", &AdaptConfig::quad_order);

  py::class_<ErrorRecord>(m, "ErrorRecord")
      .def_readonly("level", &ErrorRecord::level)
      .def_readonly("dofs", &ErrorRecord::dofs)
      .def_readonly("h_max", &ErrorRecord::h_max)
      .def_readonly("h_err", &ErrorRecord::h_err)
      .def_readonly("h_err_rel", &ErrorRecord::h_err_rel)
      .def_readonly("para_err", &ErrorRecord::para_err)
      .def_readonly("eta_total", &ErrorRecord::eta_total)
      .def_readonly("majorant", &ErrorRecord::majorant)
      .def_readonly("i_eff", &ErrorRecord::i_eff)
      .def_readonly("gmres_iters", &ErrorRecord::gmres_iters)
      .def_readonly("wall_s", &ErrorRecord::wall_s);
  py::class_<AdaptResult>(m, "AdaptResult")
      .def_readonly("records", &AdaptResult::records)
      .def_readonly("mesh", &AdaptResult::mesh)
      .def_readonly("solution", &AdaptResult::solution)
      .def_readonly("aborted", &AdaptResult::aborted)
      .def_readonly("abort_reason", &AdaptResult::abort_reason);

  m.def("doerfler_mark", &doerfler_mark, py::arg("indicator"), py::arg("bulk"));
  m.def("transfer_solution", &transfer_solution, py::arg("coarse"), py::arg("fine"),
        py::arg("coarse_coeffs"));
  m.def("adaptive_loop",
        [](const Benchmark& bench, int degree, const AdaptConfig& cfg,
           const std::vector<int>& subdivisions) {
          return adaptive_loop(bench, degree, cfg, subdivisions);
        },
        py::arg("benchmark"), py::arg("degree"), py::arg("config") = AdaptConfig(),
        py::arg("subdivisions") = std::vector<int>());

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("benchmark", &RunConfig::benchmark)
      .def_readwrite("d", &RunConfig::d)
      .def_readwrite("degree", &RunConfig::degree)
      .def_readwrite("scale", &RunConfig::scale)
      .def_readwrite("adapt", &RunConfig::adapt)
      .def_readwrite("subdivisions", &RunConfig::subdivisions)
      .def_readwrite("outdir", &RunConfig::outdir)
      .def_readwrite("vtk_levels", &RunConfig::vtk_levels)
      .def_readwrite("vtk_all", &RunConfig::vtk_all);
  m.def("parse_run_config",
        [](const std::string& text) {
          std::istringstream in(text);
          return parse_run_config(in);
        },
        py::arg("text"));
  m.def("parse_run_config_file", &parse_run_config_file, py::arg("path"));
  m.def("run", &run, py::arg("config"),
        "Execute a configured study; returns the process exit status.");

  m.def("write_csv",
        [](const std::string& path, const std::vector<ErrorRecord>& records) {
          std::ofstream out(path);
          if (!out) throw ConfigError("cannot write file: " + path);
          write_csv(out, records);
        },
        py::arg("path"), py::arg("records"));
  m.def("read_csv",
        [](const std::string& path) {
          std::ifstream in(path);
          if (!in) throw ConfigError("cannot open file: " + path);
          return read_csv(in);
        },
        py::arg("path"));
  m.def("vertex_values", &vertex_values, py::arg("space"), py::arg("coeffs"));
  m.def("write_vtk",
        [](const std::string& path, const SpaceTimeMesh& mesh,
           const std::optional<std::vector<double>>& vertex_solution,
           const std::optional<std::vector<double>>& cell_indicator) {
          std::ofstream out(path);
          if (!out) throw ConfigError("cannot write file: " + path);
          VtkFields fields;
          if (vertex_solution) fields.vertex_solution = &*vertex_solution;
          if (cell_indicator) fields.cell_indicator = &*cell_indicator;
          write_vtk(out, mesh, fields);
        },
        py::arg("path"), py::arg("mesh"),
        py::arg("vertex_solution") = std::nullopt,
        py::arg("cell_indicator") = std::nullopt);
}

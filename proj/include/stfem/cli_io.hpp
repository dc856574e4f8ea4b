#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stfem/adapt.hpp"

namespace stfem {

/// A complete run description, parsed from flat `key = value` text. Every
/// field is validated by the parser; see configs/ for annotated examples.
struct RunConfig {
  std::string benchmark;
  int d = 1;
  int degree = 1;
  double scale = 1.0;  ///< source amplitude factor of circular_arc

  AdaptConfig adapt;
  std::vector<int> subdivisions;  ///< initial grid; empty takes the benchmark default

  std::string outdir = "out";
  std::vector<int> vtk_levels;
  bool vtk_all = false;
};

/// Parses and validates a configuration. Unknown keys, malformed values, and
/// out-of-range settings raise ConfigError naming the line and field.
RunConfig parse_run_config(std::istream& in);
RunConfig parse_run_config_file(const std::string& path);

/// Convergence table. Header
///   level,dofs,h_max,h_err,h_err_rel,para_err,eta_total,majorant,i_eff,gmres_iters,wall_s
/// with 17-significant-digit floats; absent columns stay empty.
void write_csv(std::ostream& out, const std::vector<ErrorRecord>& records);

/// Reads a table produced by write_csv; floats round-trip bit-exactly.
std::vector<ErrorRecord> read_csv(std::istream& in);

struct VtkFields {
  const std::vector<double>* vertex_solution = nullptr;  ///< one value per mesh vertex
  const std::vector<double>* cell_indicator = nullptr;   ///< one value per element
};

/// Legacy ASCII VTK export of the space-time mesh (triangles or tetrahedra)
/// with optional point scalars (solution) and cell scalars (indicator); the
/// element subdomain id is always attached.
void write_vtk(std::ostream& out, const SpaceTimeMesh& mesh,
               const VtkFields& fields = {});

/// Discrete function values at the mesh vertices, for VTK point data.
std::vector<double> vertex_values(const FESpace& space,
                                  const std::vector<double>& coeffs);

/// Machine-readable run summary: final column values and least-squares
/// convergence rates over the last three levels, both against h_max and
/// against the dof count.
void write_summary(std::ostream& out, const std::vector<ErrorRecord>& records);

/// Executes the configured study and writes errors.csv, summary, and any
/// requested level_<k>.vtk into the output directory. The environment
/// variable STFEM_OUTDIR overrides the configured directory. Returns 0 on
/// success and 1 when the solver gave up (the partial table is still
/// written).
int run(const RunConfig& config);

}  // namespace stfem

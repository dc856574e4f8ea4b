#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include "stfem/cli_io.hpp"

namespace stfem {

namespace {

constexpr const char* kCsvHeader =
    "level,dofs,h_max,h_err,h_err_rel,para_err,eta_total,majorant,i_eff,"
    "gmres_iters,wall_s";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string();
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double csv_double(const std::string& v, int line) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty()) {
    throw ConfigError("csv line " + std::to_string(line) + ": bad number '" + v + "'");
  }
  return out;
}

std::optional<double> csv_opt(const std::string& v, int line) {
  if (v.empty()) return std::nullopt;
  return csv_double(v, line);
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
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

void write_csv(std::ostream& out, const std::vector<ErrorRecord>& records) {
  if (records.empty()) throw InvalidInput("write_csv: no records");
  out << kCsvHeader << "\n";
  for (const ErrorRecord& r : records) {
    out << r.level << ',' << r.dofs << ',' << fmt(r.h_max) << ','
        << fmt_opt(r.h_err) << ',' << fmt_opt(r.h_err_rel) << ','
        << fmt_opt(r.para_err) << ',' << fmt_opt(r.eta_total) << ','
        << fmt_opt(r.majorant) << ',' << fmt_opt(r.i_eff) << ','
        << r.gmres_iters << ',' << fmt(r.wall_s) << "\n";
  }
}

std::vector<ErrorRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ConfigError("csv: missing or unexpected header");
  }
  std::vector<ErrorRecord> records;
  int ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    const auto f = split_row(line);
    if (f.size() != 11) {
      throw ConfigError("csv line " + std::to_string(ln) + ": expected 11 columns, got " +
                        std::to_string(f.size()));
    }
    ErrorRecord r;
    r.level = static_cast<int>(csv_double(f[0], ln));
    r.dofs = static_cast<long>(csv_double(f[1], ln));
    r.h_max = csv_double(f[2], ln);
    r.h_err = csv_opt(f[3], ln);
    r.h_err_rel = csv_opt(f[4], ln);
    r.para_err = csv_opt(f[5], ln);
    r.eta_total = csv_opt(f[6], ln);
    r.majorant = csv_opt(f[7], ln);
    r.i_eff = csv_opt(f[8], ln);
    r.gmres_iters = static_cast<int>(csv_double(f[9], ln));
    r.wall_s = csv_double(f[10], ln);
    records.push_back(r);
  }
  return records;
}

std::vector<double> vertex_values(const FESpace& space,
                                  const std::vector<double>& coeffs) {
  if (static_cast<int>(coeffs.size()) != space.n_total()) {
    throw InvalidInput("vertex_values: coefficient vector size mismatch");
  }
  const SpaceTimeMesh& mesh = space.mesh();
  const int dim = mesh.dim();
  std::vector<double> out(mesh.num_vertices(), 0.0);
  std::vector<std::uint8_t> seen(mesh.num_vertices(), 0);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    for (int i = 0; i <= dim; ++i) {
      const int v = mesh.elem_vertex(k, i);
      if (seen[v]) continue;
      seen[v] = 1;
      Point xi{0.0, 0.0, 0.0};
      if (i > 0) xi[i - 1] = 1.0;
      out[v] = space.eval(coeffs, k, xi);
    }
  }
  return out;
}

void write_vtk(std::ostream& out, const SpaceTimeMesh& mesh,
               const VtkFields& fields) {
  const int nv = mesh.num_vertices();
  const int ne = mesh.num_elements();
  const int dim = mesh.dim();
  if (fields.vertex_solution &&
      static_cast<int>(fields.vertex_solution->size()) != nv) {
    throw InvalidInput("write_vtk: vertex field size mismatch");
  }
  if (fields.cell_indicator &&
      static_cast<int>(fields.cell_indicator->size()) != ne) {
    throw InvalidInput("write_vtk: cell field size mismatch");
  }

  out << "# vtk DataFile Version 3.0\n"
      << "space-time finite element export\n"
      << "ASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n"
      << "POINTS " << nv << " double\n";
  for (int v = 0; v < nv; ++v) {
    const Point& x = mesh.vertex(v);
    if (dim == 2) {
      out << fmt(x[0]) << ' ' << fmt(x[1]) << " 0\n";
    } else {
      out << fmt(x[0]) << ' ' << fmt(x[1]) << ' ' << fmt(x[2]) << "\n";
    }
  }

  out << "CELLS " << ne << ' ' << static_cast<long>(ne) * (dim + 2) << "\n";
  for (int k = 0; k < ne; ++k) {
    out << dim + 1;
    for (int i = 0; i <= dim; ++i) out << ' ' << mesh.elem_vertex(k, i);
    out << "\n";
  }
  out << "CELL_TYPES " << ne << "\n";
  const int cell_type = dim == 2 ? 5 : 10;
  for (int k = 0; k < ne; ++k) out << cell_type << "\n";

  if (fields.vertex_solution) {
    out << "POINT_DATA " << nv << "\n"
        << "SCALARS solution double 1\n"
        << "LOOKUP_TABLE default\n";
    for (double v : *fields.vertex_solution) out << fmt(v) << "\n";
  }

  out << "CELL_DATA " << ne << "\n";
  if (fields.cell_indicator) {
    out << "SCALARS indicator double 1\n"
        << "LOOKUP_TABLE default\n";
    for (double v : *fields.cell_indicator) out << fmt(v) << "\n";
  }
  out << "SCALARS subdomain int 1\n"
      << "LOOKUP_TABLE default\n";
  for (int k = 0; k < ne; ++k) out << mesh.element(k).subdomain << "\n";
}

void write_summary(std::ostream& out, const std::vector<ErrorRecord>& records) {
  if (records.empty()) throw InvalidInput("write_summary: no records");
  const ErrorRecord& last = records.back();
  out << "levels = " << records.size() << "\n"
      << "final_level = " << last.level << "\n"
      << "final_dofs = " << last.dofs << "\n"
      << "final_h_max = " << fmt(last.h_max) << "\n";

  const auto emit_final = [&](const char* name, const std::optional<double>& v) {
    if (v) out << "final_" << name << " = " << fmt(*v) << "\n";
  };
  emit_final("h_err", last.h_err);
  emit_final("h_err_rel", last.h_err_rel);
  emit_final("para_err", last.para_err);
  emit_final("eta_total", last.eta_total);
  emit_final("majorant", last.majorant);
  emit_final("i_eff", last.i_eff);

  // Least-squares rates over the trailing window of (up to) three levels.
  const int n = static_cast<int>(records.size());
  const int first = std::max(0, n - 3);
  const auto emit_rates =
      [&](const char* name,
          const std::function<std::optional<double>(const ErrorRecord&)>& get) {
        std::vector<double> lh, ld, lv;
        for (int i = first; i < n; ++i) {
          const auto v = get(records[i]);
          if (!v || !(*v > 0.0) || records[i].dofs < 1) return;
          lh.push_back(std::log(records[i].h_max));
          ld.push_back(std::log(static_cast<double>(records[i].dofs)));
          lv.push_back(std::log(*v));
        }
        if (lv.size() < 2) return;
        out << "rate_" << name << "_vs_h = " << fmt(ls_slope(lh, lv)) << "\n";
        out << "rate_" << name << "_vs_dofs = " << fmt(-ls_slope(ld, lv)) << "\n";
      };
  emit_rates("h_err", [](const ErrorRecord& r) { return r.h_err; });
  emit_rates("para_err", [](const ErrorRecord& r) { return r.para_err; });
  emit_rates("eta_total", [](const ErrorRecord& r) { return r.eta_total; });
  emit_rates("majorant", [](const ErrorRecord& r) { return r.majorant; });
}

}  // namespace stfem

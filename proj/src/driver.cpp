#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "stfem/cli_io.hpp"

namespace stfem {

namespace {

std::ofstream open_or_throw(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  return out;
}

}  // namespace

int run(const RunConfig& config) {
  RunConfig cfg = config;
  if (const char* env = std::getenv("STFEM_OUTDIR")) {
    if (*env) cfg.outdir = env;
  }
  const Benchmark bench =
      make_benchmark(cfg.benchmark, cfg.d, cfg.degree, cfg.scale);

  const std::filesystem::path outdir(cfg.outdir);
  std::filesystem::create_directories(outdir);

  const auto wants_vtk = [&](int level) {
    return cfg.vtk_all || std::find(cfg.vtk_levels.begin(), cfg.vtk_levels.end(),
                                    level) != cfg.vtk_levels.end();
  };
  const LevelCallback export_level = [&](const LevelView& view) {
    if (!wants_vtk(view.level)) return;
    auto out = open_or_throw(outdir /
                             ("level_" + std::to_string(view.level) + ".vtk"));
    const std::vector<double> at_vertices =
        vertex_values(view.space, view.solution);
    VtkFields fields;
    fields.vertex_solution = &at_vertices;
    if (view.indicator) fields.cell_indicator = &view.indicator->eta;
    write_vtk(out, view.mesh, fields);
  };

  const AdaptResult result =
      adaptive_loop(bench, cfg.degree, cfg.adapt, cfg.subdivisions, export_level);

  if (!result.records.empty()) {
    auto csv = open_or_throw(outdir / "errors.csv");
    write_csv(csv, result.records);
    auto summary = open_or_throw(outdir / "summary");
    write_summary(summary, result.records);
  }

  if (result.aborted) {
    std::fprintf(stderr, "run aborted: %s\n", result.abort_reason.c_str());
    return 1;
  }
  return 0;
}

}  // namespace stfem

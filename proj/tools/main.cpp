#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "stfem/cli_io.hpp"
#include "stfem/mesh.hpp"

namespace {

int mesh_info(const std::string& path) {
  const stfem::SpaceTimeMesh mesh = stfem::read_mesh_file(path);
  const stfem::MeshAudit audit = stfem::audit_mesh(mesh);
  std::printf("dimension        %d (space %d + time)\n", mesh.dim(), mesh.dim() - 1);
  std::printf("vertices         %d\n", mesh.num_vertices());
  std::printf("elements         %d\n", mesh.num_elements());
  std::printf("facets           %d (lateral %d, bottom %d, top %d)\n",
              mesh.num_facets(), audit.n_lateral, audit.n_bottom, audit.n_top);
  std::printf("h range          [%.6g, %.6g]\n", mesh.h_min(), mesh.h_max());
  std::printf("time range       [%.6g, %.6g]\n", mesh.t_min(), mesh.t_max());
  std::printf("volume           %.17g\n", audit.volume);
  std::printf("min shape ratio  %.6g\n", audit.min_shape_ratio);
  if (!audit.ok()) {
    std::printf("AUDIT FAILED     %s\n", audit.detail.c_str());
    return 1;
  }
  std::printf("audit            ok\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"space-time finite elements for parabolic problems"};
  app.require_subcommand(1);

  std::string run_config, validate_config, mesh_path;
  CLI::App* cmd_run = app.add_subcommand("run", "execute a configured refinement study");
  cmd_run->add_option("config", run_config, "key = value configuration file")
      ->required();
  CLI::App* cmd_validate =
      app.add_subcommand("validate", "parse a configuration and report problems");
  cmd_validate->add_option("config", validate_config, "key = value configuration file")
      ->required();
  CLI::App* cmd_info = app.add_subcommand("mesh-info", "describe a mesh file");
  cmd_info->add_option("mesh", mesh_path, "stfem-mesh file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_run->parsed()) {
      return stfem::run(stfem::parse_run_config_file(run_config));
    }
    if (cmd_validate->parsed()) {
      stfem::parse_run_config_file(validate_config);
      std::printf("ok\n");
      return 0;
    }
    if (cmd_info->parsed()) {
      return mesh_info(mesh_path);
    }
  } catch (const stfem::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

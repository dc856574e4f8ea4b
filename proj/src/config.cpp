#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "stfem/cli_io.hpp"

namespace stfem {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& key, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ", field '" + key +
                    "': " + msg);
}

long to_long(const std::string& v, int line, const std::string& key) {
  long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    fail(line, key, "expected an integer, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& v, int line, const std::string& key) {
  const long l = to_long(v, line, key);
  if (l < -2147483648L || l > 2147483647L) fail(line, key, "integer out of range");
  return static_cast<int>(l);
}

double to_double(const std::string& v, int line, const std::string& key) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    fail(line, key, "expected a number, got '" + v + "'");
  }
  if (used != v.size()) fail(line, key, "trailing characters after number in '" + v + "'");
  return out;
}

bool to_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(line, key, "expected true or false, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& v, int line, const std::string& key) {
  std::vector<int> out;
  std::istringstream is(v);
  std::string tok;
  while (is >> tok) out.push_back(to_int(tok, line, key));
  return out;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  bool have_benchmark = false;

  using Handler = std::function<void(const std::string&, int)>;
  const std::map<std::string, Handler> handlers = {
      {"benchmark",
       [&](const std::string& v, int) {
         cfg.benchmark = v;
         have_benchmark = true;
       }},
      {"d", [&](const std::string& v, int ln) { cfg.d = to_int(v, ln, "d"); }},
      {"p", [&](const std::string& v, int ln) { cfg.degree = to_int(v, ln, "p"); }},
      {"scale",
       [&](const std::string& v, int ln) { cfg.scale = to_double(v, ln, "scale"); }},
      {"mesh.subdivisions",
       [&](const std::string& v, int ln) {
         cfg.subdivisions = to_int_list(v, ln, "mesh.subdivisions");
       }},
      {"refine.mode",
       [&](const std::string& v, int ln) {
         if (v == "uniform") cfg.adapt.mode = RefinementMode::Uniform;
         else if (v == "adaptive") cfg.adapt.mode = RefinementMode::Adaptive;
         else fail(ln, "refine.mode", "expected uniform or adaptive, got '" + v + "'");
       }},
      {"refine.bulk",
       [&](const std::string& v, int ln) {
         cfg.adapt.bulk = to_double(v, ln, "refine.bulk");
       }},
      {"refine.max_dofs",
       [&](const std::string& v, int ln) {
         cfg.adapt.max_dofs = to_long(v, ln, "refine.max_dofs");
       }},
      {"refine.max_levels",
       [&](const std::string& v, int ln) {
         cfg.adapt.max_levels = to_int(v, ln, "refine.max_levels");
       }},
      {"estimator.kind",
       [&](const std::string& v, int ln) {
         if (v == "residual") cfg.adapt.estimator = IndicatorKind::Residual;
         else if (v == "functional") cfg.adapt.estimator = IndicatorKind::Functional;
         else fail(ln, "estimator.kind", "expected residual or functional, got '" + v + "'");
       }},
      {"estimator.delta",
       [&](const std::string& v, int ln) {
         cfg.adapt.delta = to_double(v, ln, "estimator.delta");
       }},
      {"estimator.literal_beta",
       [&](const std::string& v, int ln) {
         cfg.adapt.literal_beta = to_bool(v, ln, "estimator.literal_beta");
       }},
      {"estimator.volume_weighted",
       [&](const std::string& v, int ln) {
         cfg.adapt.recovery.volume_weighted =
             to_bool(v, ln, "estimator.volume_weighted");
       }},
      {"estimator.cg_iters",
       [&](const std::string& v, int ln) {
         cfg.adapt.improve.cg_iters = to_int(v, ln, "estimator.cg_iters");
       }},
      {"estimator.cg_tol",
       [&](const std::string& v, int ln) {
         cfg.adapt.improve.cg_tol = to_double(v, ln, "estimator.cg_tol");
       }},
      {"stabilization.mode",
       [&](const std::string& v, int ln) {
         if (v == "lemma1") cfg.adapt.stabilization.mode = StabilizationMode::Lemma1;
         else if (v == "constant")
           cfg.adapt.stabilization.mode = StabilizationMode::ConstantScaled;
         else fail(ln, "stabilization.mode", "expected lemma1 or constant, got '" + v + "'");
       }},
      {"stabilization.theta0",
       [&](const std::string& v, int ln) {
         cfg.adapt.stabilization.theta0 = to_double(v, ln, "stabilization.theta0");
       }},
      {"solver.preconditioner",
       [&](const std::string& v, int ln) {
         if (v == "ilu0") cfg.adapt.solver.precond = Preconditioner::Ilu0;
         else if (v == "jacobi") cfg.adapt.solver.precond = Preconditioner::Jacobi;
         else if (v == "none") cfg.adapt.solver.precond = Preconditioner::None;
         else fail(ln, "solver.preconditioner", "expected ilu0, jacobi, or none, got '" + v + "'");
       }},
      {"solver.restart",
       [&](const std::string& v, int ln) {
         cfg.adapt.solver.restart = to_int(v, ln, "solver.restart");
       }},
      {"solver.rel_tol",
       [&](const std::string& v, int ln) {
         cfg.adapt.solver.rel_tol = to_double(v, ln, "solver.rel_tol");
       }},
      {"solver.max_iters",
       [&](const std::string& v, int ln) {
         cfg.adapt.solver.max_iters = to_int(v, ln, "solver.max_iters");
       }},
      {"solver.nested_iterations",
       [&](const std::string& v, int ln) {
         cfg.adapt.nested_iterations = to_bool(v, ln, "solver.nested_iterations");
       }},
      {"solver.ni_rel_tol",
       [&](const std::string& v, int ln) {
         cfg.adapt.ni_rel_tol = to_double(v, ln, "solver.ni_rel_tol");
       }},
      {"quadrature.order",
       [&](const std::string& v, int ln) {
         cfg.adapt.quad_order = to_int(v, ln, "quadrature.order");
       }},
      {"output.dir",
       [&](const std::string& v, int) { cfg.outdir = v; }},
      {"output.vtk_levels",
       [&](const std::string& v, int ln) {
         if (v == "all") cfg.vtk_all = true;
         else cfg.vtk_levels = to_int_list(v, ln, "output.vtk_levels");
       }},
  };

  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;

    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line) +
                        ": expected 'key = value', got '" + text + "'");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line) + ": empty key");
    }

    const auto it = handlers.find(key);
    if (it == handlers.end()) {
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" +
                        key + "'");
    }
    it->second(value, line);
  }

  if (!have_benchmark) throw ConfigError("missing required field 'benchmark'");
  if (cfg.d != 1 && cfg.d != 2) throw ConfigError("field 'd': must be 1 or 2");
  if (cfg.degree < 1 || cfg.degree > 4) {
    throw ConfigError("field 'p': must be between 1 and 4");
  }
  if (!cfg.subdivisions.empty()) {
    if (static_cast<int>(cfg.subdivisions.size()) != cfg.d + 1) {
      throw ConfigError("field 'mesh.subdivisions': expected " +
                        std::to_string(cfg.d + 1) + " entries");
    }
    for (int s : cfg.subdivisions) {
      if (s < 1) throw ConfigError("field 'mesh.subdivisions': entries must be positive");
    }
  }
  if (!(cfg.adapt.bulk > 0.0) || cfg.adapt.bulk > 1.0) {
    throw ConfigError("field 'refine.bulk': must lie in (0,1]");
  }
  if (cfg.adapt.max_dofs < 1) throw ConfigError("field 'refine.max_dofs': must be positive");
  if (cfg.adapt.max_levels < 1) throw ConfigError("field 'refine.max_levels': must be positive");
  if (!(cfg.adapt.delta > 0.0) || cfg.adapt.delta > 2.0) {
    throw ConfigError("field 'estimator.delta': must lie in (0,2]");
  }
  if (cfg.adapt.improve.cg_iters < 0) {
    throw ConfigError("field 'estimator.cg_iters': must be nonnegative");
  }
  if (!(cfg.adapt.stabilization.theta0 > 0.0)) {
    throw ConfigError("field 'stabilization.theta0': must be positive");
  }
  if (cfg.adapt.solver.restart < 1 || cfg.adapt.solver.max_iters < 1 ||
      !(cfg.adapt.solver.rel_tol > 0.0)) {
    throw ConfigError("field 'solver.*': restart and max_iters must be positive, rel_tol > 0");
  }
  if (!(cfg.adapt.ni_rel_tol > 0.0)) {
    throw ConfigError("field 'solver.ni_rel_tol': must be positive");
  }
  for (int l : cfg.vtk_levels) {
    if (l < 0) throw ConfigError("field 'output.vtk_levels': levels are nonnegative");
  }
  return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_run_config(in);
}

}  // namespace stfem

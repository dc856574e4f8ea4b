#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stfem/common.hpp"

namespace stfem {

enum class BcKind { Dirichlet, NeumannZero };

/// Exact solution of a benchmark, when one is known. Gradients are spatial
/// (d components); the time derivative is separate.
struct ExactSolution {
  std::function<double(const Point&)> value;
  std::function<void(const Point&, double*)> grad_x;
  std::function<double(const Point&)> dt;
};

/// Data of one parabolic model problem
///   du/dt - div_x(nu grad_x u) = f - div_x F  in Q = Omega x (0,T).
/// Coefficient callbacks receive the subdomain id of the element being
/// integrated so data that jumps across subdomain interfaces is evaluated
/// from the correct side.
struct ProblemData {
  int d = 1;  ///< spatial dimension

  std::function<double(const Point&, int)> nu;
  bool nu_elementwise_constant = true;  ///< constant on every mesh element
  bool nu_time_dependent = false;
  double nu_low = 1.0, nu_up = 1.0;

  std::function<double(const Point&, int)> source;  ///< f
  /// Vector source F (d components); leave empty for F = 0.
  std::function<void(const Point&, int, double*)> vector_source;
  std::function<double(const Point&, int)> vector_source_div;  ///< div_x F

  std::function<double(const Point&)> initial;  ///< u_0 on Omega x {0}

  BcKind bc_kind = BcKind::Dirichlet;
  /// Dirichlet datum on the lateral boundary; empty means homogeneous.
  std::function<double(const Point&)> dirichlet;

  /// Subdomain classifier (1..n_subdomains); empty means one subdomain.
  std::function<int(const Point&)> subdomain;
  int n_subdomains = 1;

  double c_friedrichs = 0.0;  ///< Friedrichs constant of Omega

  std::optional<ExactSolution> exact;

  bool has_vector_source() const { return static_cast<bool>(vector_source); }
};

struct Benchmark {
  std::string name;
  int d = 1;
  std::vector<std::pair<double, double>> extents;  ///< d+1 axes, time last
  std::vector<int> default_subdivisions;
  int quad_bump = 0;  ///< extra quadrature order for steep data
  ProblemData problem;
};

/// Smallest c with ||v|| <= c ||grad v|| on H^1_0 of the spatial box; for
/// Omega = prod (0,a_i) this is 1/(pi*sqrt(sum 1/a_i^2)).
double box_friedrichs_constant(
    const std::vector<std::pair<double, double>>& extents, int d);

/// Gaussian peak travelling along the space-time diagonal of the unit box,
/// with homogeneous Dirichlet walls and an exact solution. d in {1,2}.
Benchmark moving_peak(int d);

/// Localized heat source moving along a circular arc in a 10x10 plate over
/// (0,5), insulated lateral walls, initial temperature 20. No exact solution.
/// `scale` multiplies the source amplitude 2.97e5.
Benchmark circular_arc(double scale = 1.0);

/// Checkerboard diffusion contrast on (-1,1)^2 x (0,1) with the classical
/// corner singularity r^0.1 mu(phi) scaled linearly in time.
Benchmark kellogg();

/// Manufactured polynomial solution of total degree p, reproducible by the
/// degree-p space; nonzero Dirichlet traces are part of the data. d in {1,2}.
Benchmark polynomial_patch(int p, int d = 1);

/// Smooth separable solution sin(pi x_1)...e^{-t}; handy for clean
/// convergence-rate checks on coarse meshes.
Benchmark smooth_sine(int d);

/// All benchmark constructors by name, for the CLI.
Benchmark make_benchmark(const std::string& name, int d, int degree,
                         double scale = 1.0);

}  // namespace stfem

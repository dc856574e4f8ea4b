#pragma once

#include <optional>
#include <vector>

#include "stfem/fespace.hpp"
#include "stfem/problems.hpp"

namespace stfem {

enum class IndicatorKind { Residual, Functional };

struct IndicatorField {
  IndicatorKind kind = IndicatorKind::Residual;
  std::vector<double> eta;  ///< per element, nonnegative
  double total_sq = 0.0;

  double total() const;
};

/// Flux field in Y_h = (V_h)^d: d values per scalar Lagrange node, stored
/// node-major, unconstrained.
struct FluxField {
  int d = 0;
  std::vector<double> coeffs;  ///< [node * d + c]
};

/// Classical residual indicator: elementwise strong residual plus the jump
/// of the discrete spatial flux, eta_K^2 = h_K^2 ||f + div_x(nu grad_x u_h)
/// - dt u_h||_K^2 + h_K ||[nu grad_x u_h]||_{dK}^2. Each interior facet
/// contributes its full jump integral to both neighbours. Only defined for
/// problems without a vector source.
IndicatorField residual_indicator(const FESpace& space, const ProblemData& problem,
                                  const std::vector<double>& u_h,
                                  int quad_order = -1);

struct FluxRecoveryConfig {
  bool volume_weighted = false;
};

/// Nodal averaging of nu grad_x u_h - F into a continuous field.
FluxField recover_flux(const FESpace& space, const ProblemData& problem,
                       const std::vector<double>& u_h,
                       const FluxRecoveryConfig& cfg = {});

/// Evaluate a flux field on one element at a reference point.
void eval_flux(const FESpace& space, const FluxField& y, int elem,
               const Point& xi, double* value);

/// Minimizer of beta -> (1+beta)*m_flux_sq + c_F^2*(1+1/beta)*m_eq_sq over
/// beta > 0, clamped to [1e-8, 1e8]. Both parts are squared integrals. The
/// `literal` variant uses the plain ratio of the squared parts instead of
/// the square root; it is not the true minimizer and exists for comparison.
double optimal_beta(double m_flux_sq, double m_eq_sq, double c_F,
                    bool literal = false);

struct MajorantState {
  double beta = 1.0;
  double delta = 1.0;
  double initial_sq = 0.0;  ///< || u_h(0) - u0 ||^2
  double flux_sq = 0.0;     ///< || F + y - nu grad_x u_h ||^2
  double eq_sq = 0.0;       ///< || f - dt u_h + div_x y ||^2
  double value_sq = 0.0;

  double value() const;
};

/// Guaranteed upper bound on the parabolic error norm, for any continuous
/// flux y, weight beta > 0, and delta in (0,2].
MajorantState majorant(const FESpace& space, const ProblemData& problem,
                       const std::vector<double>& u_h, const FluxField& y,
                       double beta, double delta = 1.0, int quad_order = -1);

/// Optimal constant weight for the current flux.
double optimize_beta(const FESpace& space, const ProblemData& problem,
                     const std::vector<double>& u_h, const FluxField& y,
                     bool literal = false, int quad_order = -1);

struct FluxImproveConfig {
  int cg_iters = 10;
  double cg_tol = 1e-2;
  int quad_order = -1;
};

/// One alternating-minimization sweep for the flux: solves the SPD auxiliary
/// problem by a few CG steps started from y0. The majorant value at the
/// result never exceeds the one at y0 for the same beta.
FluxField improve_flux(const FESpace& space, const ProblemData& problem,
                       const std::vector<double>& u_h, double beta,
                       const FluxField& y0, const FluxImproveConfig& cfg = {});

/// First part of the majorant as a per-element indicator,
/// eta_K = || F + y - nu grad_x u_h ||_{L2(K)}.
IndicatorField functional_indicator(const FESpace& space, const ProblemData& problem,
                                    const std::vector<double>& u_h,
                                    const FluxField& y, int quad_order = -1);

/// The norm the majorant bounds:
/// sqrt((2-delta)*||grad_x(u-u_h)||_Q^2 + ||(u-u_h)(T)||_Omega^2).
/// Requires an exact solution.
double parabolic_error(const FESpace& space, const ProblemData& problem,
                       const std::vector<double>& u_h, double delta = 1.0,
                       int quad_order = -1);

/// sqrt(total_sq) / energy_error; absent when the error vanishes.
std::optional<double> efficiency_index(const IndicatorField& indicator,
                                       double energy_error);

}  // namespace stfem

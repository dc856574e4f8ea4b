#include "stfem/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "stfem/linalg.hpp"

namespace stfem {

namespace {

int clamp_order(int order) { return std::min(order, 10); }

int pick_order(int requested, int p) {
  return clamp_order(requested > 0 ? requested : 2 * p + 2);
}

/// Quadrature context shared by every element of a space, rebound per element.
struct ElementEval {
  QuadratureRule rule;
  const BasisTable* tab = nullptr;
  const SpaceTimeMesh* mesh = nullptr;
  ElementMap map;
  int sub = 0;

  ElementEval(const FESpace& space, int order, bool hess)
      : rule(simplex_quadrature(space.mesh().dim(), order)),
        tab(&basis_table(space.mesh().dim(), space.degree(), rule, hess)),
        mesh(&space.mesh()) {}

  void bind(int k) {
    map = affine_map(*mesh, k);
    sub = mesh->element(k).subdomain;
  }

  void gradient(const std::vector<double>& coeffs, std::span<const int> dofs,
                int q, double* g) const {
    const int dim = tab->dim;
    double gref[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < tab->nloc; ++i) {
      const double c = coeffs[dofs[i]];
      for (int r = 0; r < dim; ++r) {
        gref[r] += c * tab->grad[(static_cast<std::size_t>(q) * tab->nloc + i) * dim + r];
      }
    }
    map.push_gradient(gref, g);
  }
};

void check_coeffs(const FESpace& space, const std::vector<double>& u_h,
                  const char* who) {
  if (static_cast<int>(u_h.size()) != space.n_total()) {
    throw InvalidInput(std::string(who) + ": coefficient vector size mismatch");
  }
}

/// Squared volume integrals of the two majorant residuals.
void majorant_parts(const FESpace& space, const ProblemData& problem,
                    const std::vector<double>& u_h, const FluxField& y,
                    int order, double* flux_sq, double* eq_sq) {
  const SpaceTimeMesh& mesh = space.mesh();
  const int dim = mesh.dim();
  const int d = dim - 1;
  const int nloc = space.n_local();
  *flux_sq = 0.0;
  *eq_sq = 0.0;

  double g[3], yg[3];
  ElementEval ev(space, order, false);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    ev.bind(k);
    const auto dofs = space.element_dofs(k);
    for (int q = 0; q < ev.tab->nq; ++q) {
      const Point x = ev.map.to_physical(ev.rule.points[q]);
      const double wdet = ev.rule.weights[q] * ev.map.det;
      const double nu = problem.nu(x, ev.sub);
      const double f = problem.source ? problem.source(x, ev.sub) : 0.0;
      double F[3] = {0.0, 0.0, 0.0};
      if (problem.has_vector_source()) problem.vector_source(x, ev.sub, F);

      ev.gradient(u_h, dofs, q, g);

      // Flux value and spatial divergence at this point.
      double yv[3] = {0.0, 0.0, 0.0};
      double div_y = 0.0;
      for (int c = 0; c < d; ++c) {
        double gref[3] = {0.0, 0.0, 0.0};
        for (int i = 0; i < nloc; ++i) {
          const double ci = y.coeffs[static_cast<std::size_t>(dofs[i]) * d + c];
          yv[c] += ci * ev.tab->value[static_cast<std::size_t>(q) * nloc + i];
          for (int r = 0; r < dim; ++r) {
            gref[r] += ci * ev.tab->grad[(static_cast<std::size_t>(q) * nloc + i) * dim + r];
          }
        }
        ev.map.push_gradient(gref, yg);
        div_y += yg[c];
      }

      double mis = 0.0;
      for (int c = 0; c < d; ++c) mis += sqr(F[c] + yv[c] - nu * g[c]);
      *flux_sq += wdet * mis;

      const double eq = f - g[d] + div_y;
      *eq_sq += wdet * eq * eq;
    }
  }
}

void check_flux(const FESpace& space, const FluxField& y, const char* who) {
  const int d = space.mesh().dim() - 1;
  if (y.d != d ||
      y.coeffs.size() != static_cast<std::size_t>(space.n_total()) * d) {
    throw InvalidInput(std::string(who) + ": flux field does not match the space");
  }
}

}  // namespace

double IndicatorField::total() const { return std::sqrt(total_sq); }

double MajorantState::value() const { return std::sqrt(value_sq); }

IndicatorField residual_indicator(const FESpace& space, const ProblemData& problem,
                                  const std::vector<double>& u_h, int quad_order) {
  if (problem.has_vector_source()) {
    throw InvalidInput(
        "residual_indicator: not defined for problems with a vector source");
  }
  check_coeffs(space, u_h, "residual_indicator");

  const SpaceTimeMesh& mesh = space.mesh();
  const int dim = mesh.dim();
  const int d = dim - 1;
  const int nloc = space.n_local();
  const int order = pick_order(quad_order, space.degree());

  IndicatorField out;
  out.kind = IndicatorKind::Residual;
  const int ne = mesh.num_elements();
  std::vector<double> vol_sq(ne, 0.0), jump_sq(ne, 0.0);

  std::vector<double> lap;
  double g[3];
  ElementEval ev(space, order, true);
  for (int k = 0; k < ne; ++k) {
    ev.bind(k);
    const auto dofs = space.element_dofs(k);
    for (int q = 0; q < ev.tab->nq; ++q) {
      const Point x = ev.map.to_physical(ev.rule.points[q]);
      const double wdet = ev.rule.weights[q] * ev.map.det;
      const double nu = problem.nu(x, ev.sub);
      const double f = problem.source ? problem.source(x, ev.sub) : 0.0;
      ev.gradient(u_h, dofs, q, g);
      physical_spatial_laplacians(ev.map, *ev.tab, q, lap);
      double lu = 0.0;
      for (int i = 0; i < nloc; ++i) lu += u_h[dofs[i]] * lap[i];
      const double r = f + nu * lu - g[d];
      vol_sq[k] += wdet * r * r;
    }
  }

  // Spatial flux jumps: evaluate nu grad_x u_h from both sides at shared
  // physical points; the full facet integral goes to both neighbours.
  BasisEval eval;
  double ga[3], gb[3], gref[3];
  for (const Facet& f : mesh.facets()) {
    if (f.boundary()) continue;
    const ElementMap map0 = affine_map(mesh, f.elem0);
    const ElementMap map1 = affine_map(mesh, f.elem1);
    const FacetQuad fq = facet_quadrature(mesh, f, map0, order);
    const auto dofs0 = space.element_dofs(f.elem0);
    const auto dofs1 = space.element_dofs(f.elem1);
    const int sub0 = mesh.element(f.elem0).subdomain;
    const int sub1 = mesh.element(f.elem1).subdomain;

    double acc = 0.0;
    for (std::size_t q = 0; q < fq.w.size(); ++q) {
      const Point& x = fq.phys[q];

      eval_basis(dim, space.degree(), fq.ref[q], eval);
      for (int r = 0; r < dim; ++r) {
        gref[r] = 0.0;
        for (int i = 0; i < nloc; ++i) gref[r] += u_h[dofs0[i]] * eval.grad[i * dim + r];
      }
      map0.push_gradient(gref, ga);

      eval_basis(dim, space.degree(), map1.to_reference(x), eval);
      for (int r = 0; r < dim; ++r) {
        gref[r] = 0.0;
        for (int i = 0; i < nloc; ++i) gref[r] += u_h[dofs1[i]] * eval.grad[i * dim + r];
      }
      map1.push_gradient(gref, gb);

      const double nu0 = problem.nu(x, sub0);
      const double nu1 = problem.nu(x, sub1);
      double jump = 0.0;
      for (int c = 0; c < d; ++c) jump += sqr(nu0 * ga[c] - nu1 * gb[c]);
      acc += fq.w[q] * jump;
    }
    jump_sq[f.elem0] += acc;
    jump_sq[f.elem1] += acc;
  }

  out.eta.resize(ne);
  for (int k = 0; k < ne; ++k) {
    const double h = mesh.element_diameter(k);
    const double e2 = h * h * vol_sq[k] + h * jump_sq[k];
    out.eta[k] = std::sqrt(e2);
    out.total_sq += e2;
  }
  return out;
}

FluxField recover_flux(const FESpace& space, const ProblemData& problem,
                       const std::vector<double>& u_h,
                       const FluxRecoveryConfig& cfg) {
  check_coeffs(space, u_h, "recover_flux");
  const SpaceTimeMesh& mesh = space.mesh();
  const int dim = mesh.dim();
  const int d = dim - 1;
  const int p = space.degree();
  const int nloc = space.n_local();
  const int n = space.n_total();

  FluxField y;
  y.d = d;
  y.coeffs.assign(static_cast<std::size_t>(n) * d, 0.0);
  std::vector<double> weight(n, 0.0);

  // Reference coordinates and basis gradients at the local Lagrange nodes.
  const auto& nodes = lagrange_nodes(dim, p);
  std::vector<BasisEval> at_node(nloc);
  std::vector<Point> node_xi(nloc);
  for (int i = 0; i < nloc; ++i) {
    Point xi{0.0, 0.0, 0.0};
    for (int r = 0; r < dim; ++r) xi[r] = static_cast<double>(nodes[i][r + 1]) / p;
    node_xi[i] = xi;
    eval_basis(dim, p, xi, at_node[i]);
  }

  double g[3], gref[3], F[3];
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const ElementMap map = affine_map(mesh, k);
    const int sub = mesh.element(k).subdomain;
    const auto dofs = space.element_dofs(k);
    const double w = cfg.volume_weighted ? mesh.element_volume(k) : 1.0;

    for (int i = 0; i < nloc; ++i) {
      for (int r = 0; r < dim; ++r) {
        gref[r] = 0.0;
        for (int j = 0; j < nloc; ++j) {
          gref[r] += u_h[dofs[j]] * at_node[i].grad[j * dim + r];
        }
      }
      map.push_gradient(gref, g);
      const Point x = map.to_physical(node_xi[i]);
      const double nu = problem.nu(x, sub);
      F[0] = F[1] = F[2] = 0.0;
      if (problem.has_vector_source()) problem.vector_source(x, sub, F);

      const int node = dofs[i];
      for (int c = 0; c < d; ++c) {
        y.coeffs[static_cast<std::size_t>(node) * d + c] += w * (nu * g[c] - F[c]);
      }
      weight[node] += w;
    }
  }
  for (int node = 0; node < n; ++node) {
    for (int c = 0; c < d; ++c) {
      y.coeffs[static_cast<std::size_t>(node) * d + c] /= weight[node];
    }
  }
  return y;
}

void eval_flux(const FESpace& space, const FluxField& y, int elem,
               const Point& xi, double* value) {
  check_flux(space, y, "eval_flux");
  BasisEval eval;
  eval_basis(space.mesh().dim(), space.degree(), xi, eval);
  const auto dofs = space.element_dofs(elem);
  for (int c = 0; c < y.d; ++c) value[c] = 0.0;
  for (int i = 0; i < space.n_local(); ++i) {
    for (int c = 0; c < y.d; ++c) {
      value[c] += y.coeffs[static_cast<std::size_t>(dofs[i]) * y.d + c] * eval.value[i];
    }
  }
}

double optimal_beta(double m_flux_sq, double m_eq_sq, double c_F, bool literal) {
  if (m_flux_sq < 0.0 || m_eq_sq < 0.0 || c_F < 0.0) {
    throw InvalidInput("optimal_beta: negative inputs");
  }
  const double lo = 1e-8, hi = 1e8;
  if (m_flux_sq == 0.0 && m_eq_sq == 0.0) return 1.0;
  if (m_flux_sq == 0.0) return hi;
  const double ratio = literal ? m_eq_sq / m_flux_sq : std::sqrt(m_eq_sq / m_flux_sq);
  return std::clamp(c_F * ratio, lo, hi);
}

MajorantState majorant(const FESpace& space, const ProblemData& problem,
                       const std::vector<double>& u_h, const FluxField& y,
                       double beta, double delta, int quad_order) {
  if (!(beta > 0.0)) throw InvalidInput("majorant: beta must be positive");
  if (!(delta > 0.0) || delta > 2.0) throw InvalidInput("majorant: delta outside (0,2]");
  if (problem.c_friedrichs <= 0.0) {
    throw InvalidInput("majorant: problem lacks a Friedrichs constant");
  }
  check_coeffs(space, u_h, "majorant");
  check_flux(space, y, "majorant");
  const int order = pick_order(quad_order, space.degree());

  MajorantState st;
  st.beta = beta;
  st.delta = delta;
  majorant_parts(space, problem, u_h, y, order, &st.flux_sq, &st.eq_sq);

  // Initial trace misfit over the bottom facets.
  const SpaceTimeMesh& mesh = space.mesh();
  BasisEval eval;
  for (const Facet& f : mesh.facets()) {
    if (!f.boundary() || f.tag != BoundaryTag::Bottom) continue;
    const ElementMap map = affine_map(mesh, f.elem0);
    const FacetQuad fq = facet_quadrature(mesh, f, map, order);
    const auto dofs = space.element_dofs(f.elem0);
    for (std::size_t q = 0; q < fq.w.size(); ++q) {
      eval_basis(mesh.dim(), space.degree(), fq.ref[q], eval);
      double v = 0.0;
      for (int i = 0; i < space.n_local(); ++i) v += u_h[dofs[i]] * eval.value[i];
      const double u0 = problem.initial ? problem.initial(fq.phys[q]) : 0.0;
      st.initial_sq += fq.w[q] * sqr(v - u0);
    }
  }

  const double cf2 = sqr(problem.c_friedrichs);
  st.value_sq = st.initial_sq +
                (1.0 / delta) * ((1.0 + beta) * st.flux_sq +
                                 cf2 * (1.0 + 1.0 / beta) * st.eq_sq);
  return st;
}

double optimize_beta(const FESpace& space, const ProblemData& problem,
                     const std::vector<double>& u_h, const FluxField& y,
                     bool literal, int quad_order) {
  check_coeffs(space, u_h, "optimize_beta");
  check_flux(space, y, "optimize_beta");
  const int order = pick_order(quad_order, space.degree());
  double flux_sq = 0.0, eq_sq = 0.0;
  majorant_parts(space, problem, u_h, y, order, &flux_sq, &eq_sq);
  return optimal_beta(flux_sq, eq_sq, problem.c_friedrichs, literal);
}

FluxField improve_flux(const FESpace& space, const ProblemData& problem,
                       const std::vector<double>& u_h, double beta,
                       const FluxField& y0, const FluxImproveConfig& cfg) {
  if (!(beta > 0.0)) throw InvalidInput("improve_flux: beta must be positive");
  check_coeffs(space, u_h, "improve_flux");
  check_flux(space, y0, "improve_flux");
  const SpaceTimeMesh& mesh = space.mesh();
  const int dim = mesh.dim();
  const int d = dim - 1;
  const int nloc = space.n_local();
  const int n = space.n_total();
  const int order = pick_order(cfg.quad_order, space.degree());

  const double wm = 1.0 + beta;
  const double wd = sqr(problem.c_friedrichs) * (1.0 + 1.0 / beta);

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_elements()) * nloc * nloc * d * d);
  std::vector<double> rhs(static_cast<std::size_t>(n) * d, 0.0);

  std::vector<double> grad(static_cast<std::size_t>(nloc) * dim);
  const int nb = nloc * d;
  std::vector<double> Ke(static_cast<std::size_t>(nb) * nb);
  double g[3];
  ElementEval ev(space, order, false);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    ev.bind(k);
    const auto dofs = space.element_dofs(k);
    std::fill(Ke.begin(), Ke.end(), 0.0);
    for (int q = 0; q < ev.tab->nq; ++q) {
      const Point x = ev.map.to_physical(ev.rule.points[q]);
      const double wdet = ev.rule.weights[q] * ev.map.det;
      const double* phi = &ev.tab->value[static_cast<std::size_t>(q) * nloc];
      for (int i = 0; i < nloc; ++i) {
        ev.map.push_gradient(
            &ev.tab->grad[(static_cast<std::size_t>(q) * nloc + i) * dim],
            &grad[static_cast<std::size_t>(i) * dim]);
      }
      const double nu = problem.nu(x, ev.sub);
      const double f = problem.source ? problem.source(x, ev.sub) : 0.0;
      double F[3] = {0.0, 0.0, 0.0};
      if (problem.has_vector_source()) problem.vector_source(x, ev.sub, F);
      ev.gradient(u_h, dofs, q, g);
      const double eq = f - g[d];

      for (int i = 0; i < nloc; ++i) {
        const double* gi = &grad[static_cast<std::size_t>(i) * dim];
        for (int c = 0; c < d; ++c) {
          rhs[dofs[i] * d + c] +=
              wdet * (wm * (nu * g[c] - F[c]) * phi[i] - wd * eq * gi[c]);
          double* krow = &Ke[static_cast<std::size_t>(i * d + c) * nb];
          for (int j = 0; j < nloc; ++j) {
            const double* gj = &grad[static_cast<std::size_t>(j) * dim];
            for (int e = 0; e < d; ++e) {
              double v = wd * gj[e] * gi[c];
              if (e == c) v += wm * phi[j] * phi[i];
              krow[j * d + e] += wdet * v;
            }
          }
        }
      }
    }
    for (int i = 0; i < nloc; ++i) {
      for (int c = 0; c < d; ++c) {
        const double* krow = &Ke[static_cast<std::size_t>(i * d + c) * nb];
        for (int j = 0; j < nloc; ++j) {
          for (int e = 0; e < d; ++e) {
            trip.push_back({dofs[i] * d + c, dofs[j] * d + e, krow[j * d + e]});
          }
        }
      }
    }
  }

  CsrMatrix A = csr_from_triplets(n * d, trip);
  FluxField y = y0;
  try {
    cg(A, rhs, y.coeffs, cfg.cg_tol, cfg.cg_iters);
  } catch (const InvalidInput&) {
    std::fprintf(stderr,
                 "warning: flux improvement system was not positive definite, "
                 "keeping the averaged flux\n");
    return y0;
  }
  return y;
}

IndicatorField functional_indicator(const FESpace& space, const ProblemData& problem,
                                    const std::vector<double>& u_h,
                                    const FluxField& y, int quad_order) {
  check_coeffs(space, u_h, "functional_indicator");
  check_flux(space, y, "functional_indicator");
  const SpaceTimeMesh& mesh = space.mesh();
  const int d = mesh.dim() - 1;
  const int nloc = space.n_local();
  const int order = pick_order(quad_order, space.degree());

  IndicatorField out;
  out.kind = IndicatorKind::Functional;
  out.eta.resize(mesh.num_elements());

  double g[3];
  ElementEval ev(space, order, false);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    ev.bind(k);
    const auto dofs = space.element_dofs(k);
    double acc = 0.0;
    for (int q = 0; q < ev.tab->nq; ++q) {
      const Point x = ev.map.to_physical(ev.rule.points[q]);
      const double wdet = ev.rule.weights[q] * ev.map.det;
      const double nu = problem.nu(x, ev.sub);
      double F[3] = {0.0, 0.0, 0.0};
      if (problem.has_vector_source()) problem.vector_source(x, ev.sub, F);
      ev.gradient(u_h, dofs, q, g);
      double mis = 0.0;
      for (int c = 0; c < d; ++c) {
        double yv = 0.0;
        for (int i = 0; i < nloc; ++i) {
          yv += y.coeffs[static_cast<std::size_t>(dofs[i]) * d + c] *
                ev.tab->value[static_cast<std::size_t>(q) * nloc + i];
        }
        mis += sqr(F[c] + yv - nu * g[c]);
      }
      acc += wdet * mis;
    }
    out.eta[k] = std::sqrt(acc);
    out.total_sq += acc;
  }
  return out;
}

double parabolic_error(const FESpace& space, const ProblemData& problem,
                       const std::vector<double>& u_h, double delta,
                       int quad_order) {
  if (!(delta > 0.0) || delta > 2.0) {
    throw InvalidInput("parabolic_error: delta outside (0,2]");
  }
  if (!problem.exact) throw InvalidInput("parabolic_error: no exact solution");
  check_coeffs(space, u_h, "parabolic_error");
  const SpaceTimeMesh& mesh = space.mesh();
  const int dim = mesh.dim();
  const int d = dim - 1;
  const int order = clamp_order(quad_order > 0 ? quad_order : 2 * space.degree() + 4);
  const ExactSolution& ex = *problem.exact;

  double grad_sq = 0.0;
  double g[3], gex[3];
  ElementEval ev(space, order, false);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    ev.bind(k);
    const auto dofs = space.element_dofs(k);
    for (int q = 0; q < ev.tab->nq; ++q) {
      const Point x = ev.map.to_physical(ev.rule.points[q]);
      ev.gradient(u_h, dofs, q, g);
      ex.grad_x(x, gex);
      double mis = 0.0;
      for (int c = 0; c < d; ++c) mis += sqr(gex[c] - g[c]);
      grad_sq += ev.rule.weights[q] * ev.map.det * mis;
    }
  }

  double trace_sq = 0.0;
  BasisEval eval;
  for (const Facet& f : mesh.facets()) {
    if (!f.boundary() || f.tag != BoundaryTag::Top) continue;
    const ElementMap map = affine_map(mesh, f.elem0);
    const FacetQuad fq = facet_quadrature(mesh, f, map, order);
    const auto dofs = space.element_dofs(f.elem0);
    for (std::size_t q = 0; q < fq.w.size(); ++q) {
      eval_basis(dim, space.degree(), fq.ref[q], eval);
      double v = 0.0;
      for (int i = 0; i < space.n_local(); ++i) v += u_h[dofs[i]] * eval.value[i];
      trace_sq += fq.w[q] * sqr(ex.value(fq.phys[q]) - v);
    }
  }
  return std::sqrt((2.0 - delta) * grad_sq + trace_sq);
}

std::optional<double> efficiency_index(const IndicatorField& indicator,
                                       double energy_error) {
  if (!(energy_error > 0.0)) return std::nullopt;
  return indicator.total() / energy_error;
}

}  // namespace stfem

#include "stfem/assembly.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>

namespace stfem {

namespace {

int default_order(int p) { return 2 * p + 2; }

int clamp_order(int order) { return std::min(order, 10); }

}  // namespace

void element_system(const FESpace& space, const ProblemData& problem,
                    const StabilizationParams& stab, int k, int order,
                    std::vector<double>& Ke, std::vector<double>& be) {
  const SpaceTimeMesh& mesh = space.mesh();
  const int dim = mesh.dim();
  const int d = dim - 1;
  const int nloc = space.n_local();
  const ElementMap map = affine_map(mesh, k);
  const QuadratureRule& rule = simplex_quadrature(dim, clamp_order(order));
  const BasisTable& tab = basis_table(dim, space.degree(), rule, true);

  Ke.assign(static_cast<std::size_t>(nloc) * nloc, 0.0);
  be.assign(nloc, 0.0);

  const int sub = mesh.element(k).subdomain;
  const double th = stab.theta[k] * mesh.element_diameter(k);
  const bool has_F = problem.has_vector_source();

  std::vector<double> grad(static_cast<std::size_t>(nloc) * dim);
  std::vector<double> lap;
  double Fq[3] = {0.0, 0.0, 0.0};

  for (int q = 0; q < tab.nq; ++q) {
    const Point x = map.to_physical(rule.points[q]);
    const double wdet = rule.weights[q] * map.det;
    const double* phi = &tab.value[static_cast<std::size_t>(q) * nloc];
    for (int i = 0; i < nloc; ++i) {
      map.push_gradient(&tab.grad[(static_cast<std::size_t>(q) * nloc + i) * dim],
                        &grad[static_cast<std::size_t>(i) * dim]);
    }
    physical_spatial_laplacians(map, tab, q, lap);

    const double nu = problem.nu(x, sub);
    const double f = problem.source ? problem.source(x, sub) : 0.0;
    double divF = 0.0;
    if (has_F) {
      problem.vector_source(x, sub, Fq);
      divF = problem.vector_source_div(x, sub);
    }

    for (int i = 0; i < nloc; ++i) {
      const double* gi = &grad[static_cast<std::size_t>(i) * dim];
      const double gti = gi[d];
      double load = f * phi[i] + th * (f - divF) * gti;
      if (has_F) {
        for (int c = 0; c < d; ++c) load += Fq[c] * gi[c];
      }
      be[i] += wdet * load;

      for (int j = 0; j < nloc; ++j) {
        const double* gj = &grad[static_cast<std::size_t>(j) * dim];
        double gxx = 0.0;
        for (int c = 0; c < d; ++c) gxx += gj[c] * gi[c];
        const double val = nu * gxx - phi[j] * gti +
                           th * (gj[d] - nu * lap[j]) * gti;
        Ke[static_cast<std::size_t>(i) * nloc + j] += wdet * val;
      }
    }
  }
}

StabilizationParams compute_stabilization(const FESpace& space,
                                          const ProblemData& problem,
                                          const StabilizationConfig& cfg) {
  const SpaceTimeMesh& mesh = space.mesh();
  const int dim = mesh.dim();
  const int d = dim - 1;
  const int p = space.degree();
  const int ne = mesh.num_elements();
  if (cfg.theta0 <= 0.0) throw InvalidInput("compute_stabilization: theta0 must be positive");

  StabilizationParams out;
  out.mode = cfg.mode;
  out.theta.resize(ne);
  out.c_inv.assign(ne, 0.0);

  const bool remark_case = p == 1 && problem.nu_elementwise_constant;
  if (cfg.mode == StabilizationMode::ConstantScaled || remark_case) {
    for (int k = 0; k < ne; ++k) out.theta[k] = cfg.theta0 * mesh.element_diameter(k);
    return out;
  }

  const int order = clamp_order(cfg.quad_order > 0 ? cfg.quad_order : default_order(p));
  const QuadratureRule& rule = simplex_quadrature(dim, order);
  const BasisTable& tab = basis_table(dim, p, rule, true);
  const int nloc = tab.nloc;

  std::vector<double> grad(static_cast<std::size_t>(nloc) * dim);
  std::vector<double> lap;

  for (int k = 0; k < ne; ++k) {
    const ElementMap map = affine_map(mesh, k);
    const double h = mesh.element_diameter(k);
    const int sub = mesh.element(k).subdomain;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nloc, nloc);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nloc, nloc);
    for (int q = 0; q < tab.nq; ++q) {
      const Point x = map.to_physical(rule.points[q]);
      const double wdet = rule.weights[q] * map.det;
      const double nu = problem.nu(x, sub);
      for (int i = 0; i < nloc; ++i) {
        map.push_gradient(&tab.grad[(static_cast<std::size_t>(q) * nloc + i) * dim],
                          &grad[static_cast<std::size_t>(i) * dim]);
      }
      physical_spatial_laplacians(map, tab, q, lap);
      for (int i = 0; i < nloc; ++i) {
        for (int j = 0; j <= i; ++j) {
          double gxx = 0.0;
          for (int c = 0; c < d; ++c) {
            gxx += grad[static_cast<std::size_t>(i) * dim + c] *
                   grad[static_cast<std::size_t>(j) * dim + c];
          }
          A(i, j) += wdet * (nu * lap[i]) * (nu * lap[j]);
          B(i, j) += wdet * nu * gxx;
        }
      }
    }
    A *= h * h;
    A = A.selfadjointView<Eigen::Lower>();
    B = B.selfadjointView<Eigen::Lower>();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double lam_max = std::max(lam(nloc - 1), 0.0);
    const double tol = 1e-10 * std::max(lam_max, 1e-300);

    int first_kept = 0;
    while (first_kept < nloc && lam(first_kept) <= tol) ++first_kept;

    // The kernel of the right form must also annihilate the left form;
    // otherwise the generalized eigenproblem has no finite maximum.
    bool degenerate = false;
    const double a_scale = std::max(A.norm(), 1.0);
    for (int i = 0; i < first_kept; ++i) {
      if ((A * es.eigenvectors().col(i)).norm() > 1e-8 * a_scale) {
        degenerate = true;
        break;
      }
    }
    if (degenerate || first_kept == nloc) {
      if (degenerate) {
        std::fprintf(stderr,
                     "warning: element %d has a degenerate local eigenproblem, "
                     "using the scaled-constant stabilization there\n",
                     k);
        ++out.fallback_count;
      }
      out.theta[k] = cfg.theta0 * h;
      continue;
    }

    const int r = nloc - first_kept;
    const Eigen::MatrixXd P = es.eigenvectors().rightCols(r);
    const Eigen::MatrixXd At = P.transpose() * A * P;
    const Eigen::MatrixXd Bt = P.transpose() * B * P;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(At, Bt);
    const double c2 = std::max(ges.eigenvalues().maxCoeff(), 0.0);
    if (c2 <= 1e-12) {
      out.theta[k] = cfg.theta0 * h;
    } else {
      out.c_inv[k] = std::sqrt(c2);
      out.theta[k] = h / c2;
    }
  }
  return out;
}

SparseSystem assemble(const FESpace& space, const ProblemData& problem,
                      const StabilizationParams& stab, int quad_order) {
  const SpaceTimeMesh& mesh = space.mesh();
  const int ne = mesh.num_elements();
  if (static_cast<int>(stab.theta.size()) != ne) {
    throw InvariantError("assemble: stabilization does not match the mesh");
  }
  const int nloc = space.n_local();
  const int n = space.n_total();
  const int order = quad_order > 0 ? quad_order : default_order(space.degree());

  SparseSystem sys;
  sys.rhs.assign(n, 0.0);
  sys.boundary_values.assign(n, 0.0);
  for (int dof = 0; dof < n; ++dof) {
    if (space.constrained(dof) && problem.dirichlet) {
      sys.boundary_values[dof] = problem.dirichlet(space.dof_coords(dof));
    }
  }

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(ne) * nloc * nloc + n);
  std::vector<double> Ke, be;

  auto scatter = [&](std::span<const int> dofs, const std::vector<double>& Kloc,
                     const std::vector<double>& bloc) {
    const int m = static_cast<int>(dofs.size());
    for (int i = 0; i < m; ++i) {
      const int gi = dofs[i];
      if (space.constrained(gi)) continue;
      if (!bloc.empty()) sys.rhs[gi] += bloc[i];
      for (int j = 0; j < m; ++j) {
        const int gj = dofs[j];
        const double v = Kloc[static_cast<std::size_t>(i) * m + j];
        if (space.constrained(gj)) {
          sys.rhs[gi] -= v * sys.boundary_values[gj];
        } else {
          trip.push_back({gi, gj, v});
        }
      }
    }
  };

  for (int k = 0; k < ne; ++k) {
    element_system(space, problem, stab, k, order, Ke, be);
    scatter(space.element_dofs(k), Ke, be);
  }

  // Terminal mass from a_h and the initial-datum load from l_h, integrated
  // over the top and bottom boundary facets.
  std::vector<double> Mf, bf;
  BasisEval eval;
  for (const Facet& f : mesh.facets()) {
    if (!f.boundary() || f.tag == BoundaryTag::Lateral) continue;
    const int k = f.elem0;
    const ElementMap map = affine_map(mesh, k);
    const FacetQuad fq = facet_quadrature(mesh, f, map, order);
    const auto dofs = space.element_dofs(k);

    if (f.tag == BoundaryTag::Top) {
      Mf.assign(static_cast<std::size_t>(nloc) * nloc, 0.0);
      for (std::size_t q = 0; q < fq.w.size(); ++q) {
        eval_basis(mesh.dim(), space.degree(), fq.ref[q], eval);
        for (int i = 0; i < nloc; ++i) {
          for (int j = 0; j < nloc; ++j) {
            Mf[static_cast<std::size_t>(i) * nloc + j] +=
                fq.w[q] * eval.value[i] * eval.value[j];
          }
        }
      }
      scatter(dofs, Mf, {});
    } else {
      bf.assign(nloc, 0.0);
      for (std::size_t q = 0; q < fq.w.size(); ++q) {
        eval_basis(mesh.dim(), space.degree(), fq.ref[q], eval);
        const double u0 = problem.initial ? problem.initial(fq.phys[q]) : 0.0;
        for (int i = 0; i < nloc; ++i) bf[i] += fq.w[q] * u0 * eval.value[i];
      }
      for (int i = 0; i < nloc; ++i) {
        if (!space.constrained(dofs[i])) sys.rhs[dofs[i]] += bf[i];
      }
    }
  }

  for (int dof = 0; dof < n; ++dof) {
    if (space.constrained(dof)) {
      trip.push_back({dof, dof, 1.0});
      sys.rhs[dof] = sys.boundary_values[dof];
    }
  }
  sys.matrix = csr_from_triplets(n, trip);
  return sys;
}

double EnergyBreakdown::norm_h() const {
  return std::sqrt(grad_sq + time_sq + trace_T_sq + trace_0_sq);
}
double EnergyBreakdown::norm_h_bar() const {
  return std::sqrt(grad_sq + time_sq + 0.5 * (trace_T_sq + trace_0_sq));
}
double EnergyBreakdown::norm_h_star() const {
  return std::sqrt(grad_sq + l2_scaled_sq + operator_sq + trace_T_sq);
}

namespace {

/// Shared walk for both norm flavours; `err` switches the integrand from v_h
/// to u - v_h and disables the strong operator term.
EnergyBreakdown norm_walk(const FESpace& space, const ProblemData& problem,
                          const StabilizationParams& stab,
                          const std::vector<double>& coeffs, int order,
                          bool err) {
  const SpaceTimeMesh& mesh = space.mesh();
  const int dim = mesh.dim();
  const int d = dim - 1;
  const int nloc = space.n_local();
  if (static_cast<int>(coeffs.size()) != space.n_total()) {
    throw InvalidInput("energy norms: coefficient vector size mismatch");
  }
  if (static_cast<int>(stab.theta.size()) != mesh.num_elements()) {
    throw InvariantError("energy norms: stabilization does not match the mesh");
  }
  const ExactSolution* ex = nullptr;
  if (err) {
    if (!problem.exact) throw InvalidInput("energy error: no exact solution");
    ex = &*problem.exact;
  }

  EnergyBreakdown out;
  const QuadratureRule& rule = simplex_quadrature(dim, clamp_order(order));
  const BasisTable& tab = basis_table(dim, space.degree(), rule, !err);
  std::vector<double> gref(dim), gphys(dim), lap;
  double gex[3];

  for (int k = 0; k < mesh.num_elements(); ++k) {
    const ElementMap map = affine_map(mesh, k);
    const double th = stab.theta[k] * mesh.element_diameter(k);
    const int sub = mesh.element(k).subdomain;
    const auto dofs = space.element_dofs(k);

    for (int q = 0; q < tab.nq; ++q) {
      const Point x = map.to_physical(rule.points[q]);
      const double wdet = rule.weights[q] * map.det;
      const double nu = problem.nu(x, sub);

      double v = 0.0, lap_v = 0.0;
      std::fill(gref.begin(), gref.end(), 0.0);
      for (int i = 0; i < nloc; ++i) {
        const double c = coeffs[dofs[i]];
        v += c * tab.value[static_cast<std::size_t>(q) * nloc + i];
        for (int r = 0; r < dim; ++r) {
          gref[r] += c * tab.grad[(static_cast<std::size_t>(q) * nloc + i) * dim + r];
        }
      }
      map.push_gradient(gref.data(), gphys.data());
      if (!err) {
        physical_spatial_laplacians(map, tab, q, lap);
        for (int i = 0; i < nloc; ++i) lap_v += coeffs[dofs[i]] * lap[i];
      }

      double gt = gphys[d];
      double gx2 = 0.0;
      if (err) {
        ex->grad_x(x, gex);
        v = ex->value(x) - v;
        gt = ex->dt(x) - gt;
        for (int c = 0; c < d; ++c) {
          const double g = gex[c] - gphys[c];
          gx2 += g * g;
        }
      } else {
        for (int c = 0; c < d; ++c) gx2 += gphys[c] * gphys[c];
      }

      out.grad_sq += wdet * nu * gx2;
      out.grad_plain_sq += wdet * gx2;
      out.time_sq += wdet * th * gt * gt;
      out.l2_scaled_sq += wdet * v * v / th;
      if (!err) {
        const double res = gt - nu * lap_v;
        out.operator_sq += wdet * th * res * res;
      }
    }
  }

  BasisEval eval;
  for (const Facet& f : mesh.facets()) {
    if (!f.boundary() || f.tag == BoundaryTag::Lateral) continue;
    const int k = f.elem0;
    const ElementMap map = affine_map(mesh, k);
    const FacetQuad fq = facet_quadrature(mesh, f, map, order);
    const auto dofs = space.element_dofs(k);
    double acc = 0.0;
    for (std::size_t q = 0; q < fq.w.size(); ++q) {
      eval_basis(dim, space.degree(), fq.ref[q], eval);
      double v = 0.0;
      for (int i = 0; i < nloc; ++i) v += coeffs[dofs[i]] * eval.value[i];
      if (err) v = ex->value(fq.phys[q]) - v;
      acc += fq.w[q] * v * v;
    }
    (f.tag == BoundaryTag::Top ? out.trace_T_sq : out.trace_0_sq) += acc;
  }
  return out;
}

}  // namespace

EnergyBreakdown energy_norms(const FESpace& space, const ProblemData& problem,
                             const StabilizationParams& stab,
                             const std::vector<double>& coeffs, int quad_order) {
  const int order = quad_order > 0 ? quad_order : default_order(space.degree());
  return norm_walk(space, problem, stab, coeffs, order, false);
}

EnergyBreakdown energy_error(const FESpace& space, const ProblemData& problem,
                             const StabilizationParams& stab,
                             const std::vector<double>& coeffs, int quad_order) {
  const int order = quad_order > 0 ? quad_order : 2 * space.degree() + 4;
  return norm_walk(space, problem, stab, coeffs, order, true);
}

double bilinear_apply(const FESpace& space, const ProblemData& problem,
                      const StabilizationParams& stab,
                      const std::vector<double>& u, const std::vector<double>& v,
                      int quad_order) {
  const SpaceTimeMesh& mesh = space.mesh();
  const int ne = mesh.num_elements();
  const int nloc = space.n_local();
  if (static_cast<int>(stab.theta.size()) != ne) {
    throw InvariantError("bilinear_apply: stabilization does not match the mesh");
  }
  if (static_cast<int>(u.size()) != space.n_total() ||
      static_cast<int>(v.size()) != space.n_total()) {
    throw InvalidInput("bilinear_apply: coefficient vector size mismatch");
  }
  const int order = quad_order > 0 ? quad_order : default_order(space.degree());

  double acc = 0.0;
  std::vector<double> Ke, be;
  for (int k = 0; k < ne; ++k) {
    element_system(space, problem, stab, k, order, Ke, be);
    const auto dofs = space.element_dofs(k);
    for (int i = 0; i < nloc; ++i) {
      double row = 0.0;
      for (int j = 0; j < nloc; ++j) {
        row += Ke[static_cast<std::size_t>(i) * nloc + j] * u[dofs[j]];
      }
      acc += v[dofs[i]] * row;
    }
  }

  BasisEval eval;
  for (const Facet& f : mesh.facets()) {
    if (!f.boundary() || f.tag != BoundaryTag::Top) continue;
    const ElementMap map = affine_map(mesh, f.elem0);
    const FacetQuad fq = facet_quadrature(mesh, f, map, order);
    const auto dofs = space.element_dofs(f.elem0);
    for (std::size_t q = 0; q < fq.w.size(); ++q) {
      eval_basis(mesh.dim(), space.degree(), fq.ref[q], eval);
      double uu = 0.0, vv = 0.0;
      for (int i = 0; i < nloc; ++i) {
        uu += u[dofs[i]] * eval.value[i];
        vv += v[dofs[i]] * eval.value[i];
      }
      acc += fq.w[q] * uu * vv;
    }
  }
  return acc;
}

}  // namespace stfem

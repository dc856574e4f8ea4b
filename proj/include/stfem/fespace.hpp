#pragma once

#include <functional>
#include <span>
#include <vector>

#include "stfem/mesh.hpp"
#include "stfem/quadrature.hpp"

namespace stfem {

/// Affine map from the reference simplex onto one mesh element.
struct ElementMap {
  int dim = 0;
  Point x0{};            ///< image of the reference origin
  double J[3][3]{};      ///< columns are the edge vectors x_i - x_0
  double Jinv[3][3]{};
  double det = 0.0;      ///< positive; equals dim! * |K|

  Point to_physical(const Point& xi) const {
    Point x = x0;
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) x[r] += J[r][c] * xi[c];
    return x;
  }
  Point to_reference(const Point& x) const {
    Point xi{0.0, 0.0, 0.0};
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) xi[r] += Jinv[r][c] * (x[c] - x0[c]);
    return xi;
  }
  /// Pull a reference gradient back to physical coordinates (J^{-T} g).
  void push_gradient(const double* gref, double* gphys) const {
    for (int r = 0; r < dim; ++r) {
      gphys[r] = 0.0;
      for (int c = 0; c < dim; ++c) gphys[r] += Jinv[c][r] * gref[c];
    }
  }
};

/// Throws a degenerate-element error when the mapped volume vanishes.
ElementMap affine_map(const SpaceTimeMesh& mesh, int k);

int lagrange_node_count(int dim, int p);

/// Barycentric numerators (alpha_0..alpha_dim, summing to p) of the local
/// Lagrange nodes of degree p, in the fixed local enumeration order.
const std::vector<std::array<int, 4>>& lagrange_nodes(int dim, int p);

/// Values plus reference gradients (and optionally Hessians) of the degree-p
/// Lagrange basis at one reference point.
struct BasisEval {
  int nloc = 0, dim = 0;
  std::vector<double> value;  ///< [i]
  std::vector<double> grad;   ///< [i*dim + c]
  std::vector<double> hess;   ///< [(i*dim + r)*dim + c], empty unless requested
};
void eval_basis(int dim, int p, const Point& xi, BasisEval& out,
                bool hessians = false);

/// Basis evaluations at every point of a quadrature rule; cached globally per
/// (dim, degree, order, hessians) since they only depend on the reference
/// element.
struct BasisTable {
  int dim = 0, p = 0, nq = 0, nloc = 0;
  bool has_hess = false;
  std::vector<double> value;  ///< [q*nloc + i]
  std::vector<double> grad;   ///< [(q*nloc + i)*dim + c]
  std::vector<double> hess;   ///< [((q*nloc + i)*dim + r)*dim + c]
};
const BasisTable& basis_table(int dim, int p, const QuadratureRule& rule,
                              bool hessians = false);

/// Spatial Laplacians (Hessian trace over the first dim-1 coordinates) of all
/// basis functions at point q of a table with Hessians, pulled back through
/// the affine map.
void physical_spatial_laplacians(const ElementMap& map, const BasisTable& tab,
                                 int q, std::vector<double>& lap);

/// Quadrature for one mesh facet: physical weights summing to the facet
/// measure, the physical points, and their reference coordinates inside the
/// element `elem` (which must contain the facet).
struct FacetQuad {
  std::vector<Point> ref;
  std::vector<Point> phys;
  std::vector<double> w;
};
FacetQuad facet_quadrature(const SpaceTimeMesh& mesh, const Facet& facet,
                           const ElementMap& elem, int order);

/// Continuous Lagrange space of total degree p on a space-time mesh.
/// Dirichlet constraints are attached to the boundary tags given at
/// construction (the weak initial/terminal traces never constrain dofs).
class FESpace {
 public:
  FESpace(const SpaceTimeMesh& mesh, int degree,
          std::vector<BoundaryTag> dirichlet_tags);

  const SpaceTimeMesh& mesh() const { return *mesh_; }
  int degree() const { return degree_; }
  int n_local() const { return n_local_; }
  int n_total() const { return n_total_; }
  int n_free() const { return n_total_ - n_constrained_; }

  int dof(int elem, int local) const { return dof_map_[elem * n_local_ + local]; }
  std::span<const int> element_dofs(int elem) const {
    return {dof_map_.data() + static_cast<std::size_t>(elem) * n_local_,
            static_cast<std::size_t>(n_local_)};
  }
  const Point& dof_coords(int dof) const { return dof_coords_[dof]; }
  bool constrained(int dof) const { return constrained_[dof] != 0; }
  const std::vector<std::uint8_t>& constrained_mask() const { return constrained_; }

  /// Nodal interpolation: coefficients = g evaluated at the dof coordinates.
  std::vector<double> interpolate(const std::function<double(const Point&)>& g) const;

  /// Value of the discrete function at a reference point of one element.
  double eval(std::span<const double> coeffs, int elem, const Point& xi) const;

 private:
  const SpaceTimeMesh* mesh_;
  int degree_;
  int n_local_;
  int n_total_ = 0;
  int n_constrained_ = 0;
  std::vector<int> dof_map_;
  std::vector<Point> dof_coords_;
  std::vector<std::uint8_t> constrained_;
};

}  // namespace stfem

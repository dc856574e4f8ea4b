#include "stfem/fespace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace stfem {

ElementMap affine_map(const SpaceTimeMesh& mesh, int k) {
  if (k < 0 || k >= mesh.num_elements())
    throw InvalidInput("affine_map: element index out of range");
  const int dim = mesh.dim();
  ElementMap m;
  m.dim = dim;
  m.x0 = mesh.elem_vertex_coords(k, 0);
  for (int c = 0; c < dim; ++c) {
    const Point p = mesh.elem_vertex_coords(k, c + 1);
    for (int r = 0; r < dim; ++r) m.J[r][c] = p[r] - m.x0[r];
  }
  if (dim == 2) {
    m.det = m.J[0][0] * m.J[1][1] - m.J[0][1] * m.J[1][0];
  } else {
    m.det = m.J[0][0] * (m.J[1][1] * m.J[2][2] - m.J[1][2] * m.J[2][1]) -
            m.J[0][1] * (m.J[1][0] * m.J[2][2] - m.J[1][2] * m.J[2][0]) +
            m.J[0][2] * (m.J[1][0] * m.J[2][1] - m.J[1][1] * m.J[2][0]);
  }
  if (!(m.det > 0.0))
    throw InvalidInput("affine_map: degenerate element " + std::to_string(k) +
                       " (non-positive Jacobian determinant)");
  if (dim == 2) {
    const double inv = 1.0 / m.det;
    m.Jinv[0][0] = m.J[1][1] * inv;
    m.Jinv[0][1] = -m.J[0][1] * inv;
    m.Jinv[1][0] = -m.J[1][0] * inv;
    m.Jinv[1][1] = m.J[0][0] * inv;
  } else {
    const double inv = 1.0 / m.det;
    m.Jinv[0][0] = (m.J[1][1] * m.J[2][2] - m.J[1][2] * m.J[2][1]) * inv;
    m.Jinv[0][1] = (m.J[0][2] * m.J[2][1] - m.J[0][1] * m.J[2][2]) * inv;
    m.Jinv[0][2] = (m.J[0][1] * m.J[1][2] - m.J[0][2] * m.J[1][1]) * inv;
    m.Jinv[1][0] = (m.J[1][2] * m.J[2][0] - m.J[1][0] * m.J[2][2]) * inv;
    m.Jinv[1][1] = (m.J[0][0] * m.J[2][2] - m.J[0][2] * m.J[2][0]) * inv;
    m.Jinv[1][2] = (m.J[0][2] * m.J[1][0] - m.J[0][0] * m.J[1][2]) * inv;
    m.Jinv[2][0] = (m.J[1][0] * m.J[2][1] - m.J[1][1] * m.J[2][0]) * inv;
    m.Jinv[2][1] = (m.J[0][1] * m.J[2][0] - m.J[0][0] * m.J[2][1]) * inv;
    m.Jinv[2][2] = (m.J[0][0] * m.J[1][1] - m.J[0][1] * m.J[1][0]) * inv;
  }
  return m;
}

int lagrange_node_count(int dim, int p) {
  if (dim < 1 || dim > 3) throw InvalidInput("lagrange_node_count: bad dim");
  if (p < 1 || p > 4)
    throw InvalidInput("lagrange_node_count: degree must be in [1,4]");
  int n = 1;
  for (int i = 1; i <= dim; ++i) n = n * (p + i) / i;
  return n;
}

const std::vector<std::array<int, 4>>& lagrange_nodes(int dim, int p) {
  static std::map<std::pair<int, int>, std::vector<std::array<int, 4>>> cache;
  auto it = cache.find({dim, p});
  if (it != cache.end()) return it->second;

  (void)lagrange_node_count(dim, p);  // validates arguments
  std::vector<std::array<int, 4>> nodes;
  // Lexicographic sweep over the reference-coordinate numerators; the zeroth
  // barycentric takes up the remainder.
  if (dim == 1) {
    for (int a1 = 0; a1 <= p; ++a1) nodes.push_back({p - a1, a1, 0, 0});
  } else if (dim == 2) {
    for (int a2 = 0; a2 <= p; ++a2)
      for (int a1 = 0; a1 + a2 <= p; ++a1)
        nodes.push_back({p - a1 - a2, a1, a2, 0});
  } else {
    for (int a3 = 0; a3 <= p; ++a3)
      for (int a2 = 0; a2 + a3 <= p; ++a2)
        for (int a1 = 0; a1 + a2 + a3 <= p; ++a1)
          nodes.push_back({p - a1 - a2 - a3, a1, a2, a3});
  }
  return cache.emplace(std::make_pair(dim, p), std::move(nodes)).first->second;
}

namespace {

// Value and first two derivatives of P_a(l) = prod_{k<a} (p*l - k)/(a - k),
// the one-dimensional factor of the simplex Lagrange basis.
void factor_eval(int p, int a, double l, double& v, double& d, double& s) {
  v = 1.0;
  d = 0.0;
  s = 0.0;
  for (int k = 0; k < a; ++k) {
    const double f = (p * l - k) / (a - k);
    const double fp = static_cast<double>(p) / (a - k);
    s = s * f + 2.0 * d * fp;
    d = d * f + v * fp;
    v = v * f;
  }
}

}  // namespace

void eval_basis(int dim, int p, const Point& xi, BasisEval& out,
                bool hessians) {
  const auto& nodes = lagrange_nodes(dim, p);
  const int nloc = static_cast<int>(nodes.size());
  out.nloc = nloc;
  out.dim = dim;
  out.value.assign(nloc, 0.0);
  out.grad.assign(static_cast<std::size_t>(nloc) * dim, 0.0);
  if (hessians)
    out.hess.assign(static_cast<std::size_t>(nloc) * dim * dim, 0.0);
  else
    out.hess.clear();

  double lambda[4] = {1.0, 0.0, 0.0, 0.0};
  for (int c = 0; c < dim; ++c) {
    lambda[c + 1] = xi[c];
    lambda[0] -= xi[c];
  }

  double pv[4], pd[4], ps[4];
  for (int i = 0; i < nloc; ++i) {
    const auto& a = nodes[i];
    for (int j = 0; j <= dim; ++j)
      factor_eval(p, a[j], lambda[j], pv[j], pd[j], ps[j]);

    double val = 1.0;
    for (int j = 0; j <= dim; ++j) val *= pv[j];
    out.value[i] = val;

    // dN/dlambda_j and, if needed, the lambda Hessian.
    double dl[4];
    for (int j = 0; j <= dim; ++j) {
      double prod = pd[j];
      for (int m = 0; m <= dim; ++m)
        if (m != j) prod *= pv[m];
      dl[j] = prod;
    }
    // Chain rule: lambda_0 = 1 - sum(xi), lambda_{c+1} = xi_c.
    for (int c = 0; c < dim; ++c)
      out.grad[static_cast<std::size_t>(i) * dim + c] = dl[c + 1] - dl[0];

    if (hessians) {
      double hl[4][4];
      for (int j = 0; j <= dim; ++j)
        for (int m = j; m <= dim; ++m) {
          double prod;
          if (j == m) {
            prod = ps[j];
            for (int r = 0; r <= dim; ++r)
              if (r != j) prod *= pv[r];
          } else {
            prod = pd[j] * pd[m];
            for (int r = 0; r <= dim; ++r)
              if (r != j && r != m) prod *= pv[r];
          }
          hl[j][m] = hl[m][j] = prod;
        }
      for (int c = 0; c < dim; ++c)
        for (int e = 0; e < dim; ++e)
          out.hess[((static_cast<std::size_t>(i) * dim) + c) * dim + e] =
              hl[c + 1][e + 1] - hl[c + 1][0] - hl[0][e + 1] + hl[0][0];
    }
  }
}

const BasisTable& basis_table(int dim, int p, const QuadratureRule& rule,
                              bool hessians) {
  static std::map<std::tuple<int, int, int, bool>, BasisTable> cache;
  const auto key = std::make_tuple(dim, p, rule.order, hessians);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  BasisTable t;
  t.dim = dim;
  t.p = p;
  t.nq = rule.size();
  t.nloc = lagrange_node_count(dim, p);
  t.has_hess = hessians;
  t.value.resize(static_cast<std::size_t>(t.nq) * t.nloc);
  t.grad.resize(static_cast<std::size_t>(t.nq) * t.nloc * dim);
  if (hessians)
    t.hess.resize(static_cast<std::size_t>(t.nq) * t.nloc * dim * dim);

  BasisEval be;
  for (int q = 0; q < t.nq; ++q) {
    eval_basis(dim, p, rule.points[q], be, hessians);
    for (int i = 0; i < t.nloc; ++i) {
      t.value[static_cast<std::size_t>(q) * t.nloc + i] = be.value[i];
      for (int c = 0; c < dim; ++c)
        t.grad[(static_cast<std::size_t>(q) * t.nloc + i) * dim + c] =
            be.grad[static_cast<std::size_t>(i) * dim + c];
      if (hessians)
        for (int r = 0; r < dim; ++r)
          for (int c = 0; c < dim; ++c)
            t.hess[((static_cast<std::size_t>(q) * t.nloc + i) * dim + r) *
                       dim + c] =
                be.hess[(static_cast<std::size_t>(i) * dim + r) * dim + c];
    }
  }
  return cache.emplace(key, std::move(t)).first->second;
}

namespace {

// A node is identified across elements by the set of element vertices with
// nonzero barycentric weight, together with the weights. Packing (vertex id,
// numerator) pairs sorted by vertex id gives a key that is identical from
// every element containing the node.
struct NodeKey {
  std::array<std::uint64_t, 4> k{~0ull, ~0ull, ~0ull, ~0ull};
  bool operator==(const NodeKey&) const = default;
};
struct NodeKeyHash {
  std::size_t operator()(const NodeKey& key) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (std::uint64_t v : key.k) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

FESpace::FESpace(const SpaceTimeMesh& mesh, int degree,
                 std::vector<BoundaryTag> dirichlet_tags)
    : mesh_(&mesh), degree_(degree) {
  const int dim = mesh.dim();
  n_local_ = lagrange_node_count(dim, degree);
  const auto& nodes = lagrange_nodes(dim, degree);
  dof_map_.assign(static_cast<std::size_t>(mesh.num_elements()) * n_local_, -1);

  std::unordered_map<NodeKey, int, NodeKeyHash> ids;
  ids.reserve(mesh.num_vertices() * 2);

  for (int k = 0; k < mesh.num_elements(); ++k) {
    std::int32_t gv[4];
    for (int i = 0; i <= dim; ++i) gv[i] = mesh.elem_vertex(k, i);
    for (int l = 0; l < n_local_; ++l) {
      NodeKey key;
      int n = 0;
      for (int i = 0; i <= dim; ++i)
        if (nodes[l][i] > 0)
          key.k[n++] = (static_cast<std::uint64_t>(gv[i]) << 3) |
                       static_cast<std::uint64_t>(nodes[l][i]);
      std::sort(key.k.begin(), key.k.begin() + n);
      auto [it, inserted] = ids.emplace(key, n_total_);
      if (inserted) {
        Point x{0.0, 0.0, 0.0};
        for (int i = 0; i <= dim; ++i) {
          const Point& pv = mesh.vertex(gv[i]);
          const double w = static_cast<double>(nodes[l][i]) / degree;
          for (int c = 0; c < dim; ++c) x[c] += w * pv[c];
        }
        dof_coords_.push_back(x);
        ++n_total_;
      }
      dof_map_[static_cast<std::size_t>(k) * n_local_ + l] = it->second;
    }
  }

  constrained_.assign(n_total_, 0);
  for (const Facet& f : mesh.facets()) {
    if (!f.boundary()) continue;
    if (std::find(dirichlet_tags.begin(), dirichlet_tags.end(), f.tag) ==
        dirichlet_tags.end())
      continue;
    const int k = f.elem0;
    // Local geometric position of the vertex opposite this facet.
    int skip = -1;
    for (int i = 0; i <= dim; ++i) {
      const std::int32_t gv = mesh.elem_vertex(k, i);
      bool in_facet = false;
      for (int n = 0; n < dim; ++n) in_facet = in_facet || f.v[n] == gv;
      if (!in_facet) {
        skip = i;
        break;
      }
    }
    if (skip < 0)
      throw InvariantError("FESpace: facet not contained in its element");
    for (int l = 0; l < n_local_; ++l)
      if (nodes[l][skip] == 0)
        constrained_[dof(k, l)] = 1;
  }
  for (std::uint8_t c : constrained_) n_constrained_ += c;
}

std::vector<double> FESpace::interpolate(
    const std::function<double(const Point&)>& g) const {
  if (!g) throw InvalidInput("interpolate: null function");
  std::vector<double> coeffs(n_total_);
  for (int i = 0; i < n_total_; ++i) coeffs[i] = g(dof_coords_[i]);
  return coeffs;
}

double FESpace::eval(std::span<const double> coeffs, int elem,
                     const Point& xi) const {
  BasisEval be;
  eval_basis(mesh_->dim(), degree_, xi, be);
  double v = 0.0;
  for (int l = 0; l < n_local_; ++l) v += coeffs[dof(elem, l)] * be.value[l];
  return v;
}

void physical_spatial_laplacians(const ElementMap& map, const BasisTable& tab,
                                 int q, std::vector<double>& lap) {
  const int dim = tab.dim;
  const int nloc = tab.nloc;
  lap.assign(nloc, 0.0);
  for (int i = 0; i < nloc; ++i) {
    const double* h = &tab.hess[((static_cast<std::size_t>(q) * nloc + i) * dim) * dim];
    double s = 0.0;
    for (int r = 0; r < dim - 1; ++r) {  // spatial coordinates only
      for (int a = 0; a < dim; ++a) {
        for (int b = 0; b < dim; ++b) {
          s += map.Jinv[a][r] * h[a * dim + b] * map.Jinv[b][r];
        }
      }
    }
    lap[i] = s;
  }
}

FacetQuad facet_quadrature(const SpaceTimeMesh& mesh, const Facet& facet,
                           const ElementMap& elem, int order) {
  const int dim = mesh.dim();
  const int m = dim - 1;
  const QuadratureRule& rule = simplex_quadrature(m, std::min(order, 10));

  const Point& a = mesh.vertex(facet.v[0]);
  const Point& b = mesh.vertex(facet.v[1]);
  double measure = 0.0;
  if (dim == 2) {
    measure = std::hypot(b[0] - a[0], b[1] - a[1]);
  } else {
    const Point& c = mesh.vertex(facet.v[2]);
    const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const double v[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
    const double cx = u[1] * v[2] - u[2] * v[1];
    const double cy = u[2] * v[0] - u[0] * v[2];
    const double cz = u[0] * v[1] - u[1] * v[0];
    measure = 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
  }
  double scale = measure;
  for (int k = 2; k <= m; ++k) scale *= k;

  FacetQuad out;
  out.ref.resize(rule.points.size());
  out.phys.resize(rule.points.size());
  out.w.resize(rule.points.size());
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    Point x = a;
    for (int c = 0; c < m; ++c) {
      const Point& vc = mesh.vertex(facet.v[c + 1]);
      for (int r = 0; r < dim; ++r) x[r] += rule.points[q][c] * (vc[r] - a[r]);
    }
    out.phys[q] = x;
    out.ref[q] = elem.to_reference(x);
    out.w[q] = rule.weights[q] * scale;
  }
  return out;
}

}  // namespace stfem

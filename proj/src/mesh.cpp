#include "stfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace stfem {

namespace {

// Signed volume times dim! of the simplex spanned by the given vertex ids.
double edge_det(const std::vector<Point>& verts,
                const std::array<std::int32_t, 4>& v, int dim) {
  const Point& p0 = verts[v[0]];
  if (dim == 2) {
    const double a0 = verts[v[1]][0] - p0[0], a1 = verts[v[1]][1] - p0[1];
    const double b0 = verts[v[2]][0] - p0[0], b1 = verts[v[2]][1] - p0[1];
    return a0 * b1 - a1 * b0;
  }
  double m[3][3];
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) m[r][c] = verts[v[c + 1]][r] - p0[r];
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

double dist(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int c = 0; c < dim; ++c) s += sqr(a[c] - b[c]);
  return std::sqrt(s);
}

// Measure of a (dim-1)-simplex embedded in R^dim.
double facet_measure(const std::vector<Point>& verts,
                     const std::array<std::int32_t, 3>& f, int dim) {
  if (dim == 2) return dist(verts[f[0]], verts[f[1]], 2);
  const Point &a = verts[f[0]], &b = verts[f[1]], &c = verts[f[2]];
  const double u0 = b[0] - a[0], u1 = b[1] - a[1], u2 = b[2] - a[2];
  const double v0 = c[0] - a[0], v1 = c[1] - a[1], v2 = c[2] - a[2];
  const double c0 = u1 * v2 - u2 * v1;
  const double c1 = u2 * v0 - u0 * v2;
  const double c2 = u0 * v1 - u1 * v0;
  return 0.5 * std::sqrt(c0 * c0 + c1 * c1 + c2 * c2);
}

std::int64_t edge_key(std::int32_t a, std::int32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::int64_t>(a) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

void SpaceTimeMesh::finalize() {
  if (dim_ != 2 && dim_ != 3)
    throw InvalidInput("mesh: dimension must be 2 or 3 (d = 1 or 2)");
  if (vertices_.empty() || elements_.empty())
    throw InvalidInput("mesh: no vertices or no elements");

  t_min_ = std::numeric_limits<double>::infinity();
  t_max_ = -t_min_;
  for (const Point& p : vertices_) {
    t_min_ = std::min(t_min_, p[dim_ - 1]);
    t_max_ = std::max(t_max_, p[dim_ - 1]);
  }

  for (std::size_t k = 0; k < elements_.size(); ++k) {
    Element& e = elements_[k];
    for (int i = 0; i <= dim_; ++i)
      if (e.v[i] < 0 || e.v[i] >= num_vertices())
        throw InvalidInput("mesh: element " + std::to_string(k) +
                           " references vertex out of range");
    const double det = edge_det(vertices_, e.v, dim_);
    double scale = 1.0;
    for (int i = 1; i <= dim_; ++i)
      scale *= dist(vertices_[e.v[i]], vertices_[e.v[0]], dim_);
    if (!(std::abs(det) > 1e-12 * scale))
      throw InvalidInput("mesh: element " + std::to_string(k) +
                         " is degenerate (zero volume)");
    e.flip = det < 0.0;
  }

  // Facet incidence from sorted vertex tuples.
  struct Entry {
    std::array<std::int32_t, 3> key;
    std::int32_t elem;
  };
  std::vector<Entry> entries;
  entries.reserve(elements_.size() * (dim_ + 1));
  for (std::int32_t k = 0; k < num_elements(); ++k) {
    const Element& e = elements_[k];
    for (int skip = 0; skip <= dim_; ++skip) {
      Entry ent;
      ent.key = {-1, -1, -1};
      int n = 0;
      for (int i = 0; i <= dim_; ++i)
        if (i != skip) ent.key[n++] = e.v[i];
      std::sort(ent.key.begin(), ent.key.begin() + dim_);
      ent.elem = k;
      entries.push_back(ent);
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.elem < b.elem;
  });

  facets_.clear();
  facets_.reserve(entries.size() / 2 + 1);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    while (j < entries.size() && entries[j].key == entries[i].key) ++j;
    if (j - i > 2)
      throw InvalidInput("mesh: facet shared by more than two elements");
    Facet f;
    f.v = entries[i].key;
    f.elem0 = entries[i].elem;
    f.elem1 = (j - i == 2) ? entries[i + 1].elem : -1;
    if (f.boundary()) {
      bool bottom = true, top = true;
      for (int n = 0; n < dim_; ++n) {
        const double t = vertices_[f.v[n]][dim_ - 1];
        bottom = bottom && t == t_min_;
        top = top && t == t_max_;
      }
      f.tag = bottom ? BoundaryTag::Bottom
                     : (top ? BoundaryTag::Top : BoundaryTag::Lateral);
    }
    facets_.push_back(f);
    i = j;
  }

  vertex_to_elements_.assign(vertices_.size(), {});
  for (std::int32_t k = 0; k < num_elements(); ++k)
    for (int i = 0; i <= dim_; ++i)
      vertex_to_elements_[elements_[k].v[i]].push_back(k);
}

double SpaceTimeMesh::element_volume(int k) const {
  double f = 1.0;
  for (int i = 2; i <= dim_; ++i) f *= i;
  return std::abs(edge_det(vertices_, elements_[k].v, dim_)) / f;
}

double SpaceTimeMesh::element_diameter(int k) const {
  const Element& e = elements_[k];
  double d = 0.0;
  for (int i = 0; i <= dim_; ++i)
    for (int j = i + 1; j <= dim_; ++j)
      d = std::max(d, dist(vertices_[e.v[i]], vertices_[e.v[j]], dim_));
  return d;
}

double SpaceTimeMesh::h_max() const {
  double h = 0.0;
  for (int k = 0; k < num_elements(); ++k)
    h = std::max(h, element_diameter(k));
  return h;
}

double SpaceTimeMesh::h_min() const {
  double h = std::numeric_limits<double>::infinity();
  for (int k = 0; k < num_elements(); ++k)
    h = std::min(h, element_diameter(k));
  return h;
}

double SpaceTimeMesh::total_volume() const {
  double v = 0.0;
  for (int k = 0; k < num_elements(); ++k) v += element_volume(k);
  return v;
}

std::vector<int> SpaceTimeMesh::neighborhood(int k) const {
  if (k < 0 || k >= num_elements())
    throw InvalidInput("neighborhood: element index out of range");
  std::vector<int> out;
  for (int i = 0; i <= dim_; ++i) {
    const auto& lst = vertex_to_elements_[elements_[k].v[i]];
    out.insert(out.end(), lst.begin(), lst.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SpaceTimeMesh box_mesh(int d,
                       const std::vector<std::pair<double, double>>& extents,
                       const std::vector<int>& subdivisions,
                       const std::function<int(const Point&)>& classifier) {
  if (d != 1 && d != 2) throw InvalidInput("box_mesh: d must be 1 or 2");
  const int dim = d + 1;
  if (static_cast<int>(extents.size()) != dim ||
      static_cast<int>(subdivisions.size()) != dim)
    throw InvalidInput("box_mesh: need d+1 extents and subdivision counts");
  for (int c = 0; c < dim; ++c) {
    if (!(extents[c].first < extents[c].second))
      throw InvalidInput("box_mesh: empty extent on axis " + std::to_string(c));
    if (subdivisions[c] < 1)
      throw InvalidInput("box_mesh: subdivisions must be >= 1");
  }

  SpaceTimeMesh mesh;
  mesh.dim_ = dim;

  std::array<int, 3> n = {1, 1, 1};
  for (int c = 0; c < dim; ++c) n[c] = subdivisions[c];

  const auto coord = [&](int c, int i) {
    if (i == n[c]) return extents[c].second;
    return extents[c].first +
           i * (extents[c].second - extents[c].first) / n[c];
  };
  const auto grid_id = [&](int i0, int i1, int i2) {
    return (i2 * (n[1] + 1) + i1) * (n[0] + 1) + i0;
  };

  const int n2v = (dim == 3) ? n[2] : 0;
  for (int i2 = 0; i2 <= n2v; ++i2)
    for (int i1 = 0; i1 <= n[1]; ++i1)
      for (int i0 = 0; i0 <= n[0]; ++i0) {
        Point p{coord(0, i0), coord(1, i1), 0.0};
        if (dim == 3) p[2] = coord(2, i2);
        mesh.vertices_.push_back(p);
      }

  std::array<int, 3> perm0 = {0, 1, 2};
  const int n2c = (dim == 3) ? n[2] : 1;
  for (int i2 = 0; i2 < n2c; ++i2)
    for (int i1 = 0; i1 < n[1]; ++i1)
      for (int i0 = 0; i0 < n[0]; ++i0) {
        std::array<int, 3> perm = perm0;
        // Kuhn cut: one simplex per permutation, vertices walking from the
        // low cell corner to the high corner along grid edges.
        do {
          Element e;
          std::array<int, 3> g = {i0, i1, i2};
          e.v[0] = grid_id(g[0], g[1], g[2]);
          for (int j = 0; j < dim; ++j) {
            g[perm[j]] += 1;
            e.v[j + 1] = grid_id(g[0], g[1], g[2]);
          }
          e.bisect_tag = static_cast<std::int8_t>(dim);
          e.generation = 0;
          if (classifier) {
            Point c{0.0, 0.0, 0.0};
            for (int i = 0; i <= dim; ++i)
              for (int cc = 0; cc < dim; ++cc)
                c[cc] += mesh.vertices_[e.v[i]][cc] / (dim + 1);
            e.subdomain = classifier(c);
          }
          mesh.elements_.push_back(e);
        } while (std::next_permutation(perm.begin(), perm.begin() + dim));
      }

  mesh.finalize();
  return mesh;
}

SpaceTimeMesh refine_marked(const SpaceTimeMesh& mesh,
                            const std::vector<int>& marked) {
  for (int k : marked)
    if (k < 0 || k >= mesh.num_elements())
      throw InvalidInput("refine_marked: marked element out of range");

  SpaceTimeMesh out;
  out.dim_ = mesh.dim_;
  out.vertices_ = mesh.vertices_;
  out.elements_ = mesh.elements_;
  out.parents_.resize(mesh.num_elements());
  std::iota(out.parents_.begin(), out.parents_.end(), 0);

  const int dim = mesh.dim_;
  std::unordered_map<std::int64_t, std::int32_t> edge_mid;

  const auto bisect = [&](int id) {
    const Element e = out.elements_[id];
    const int k = e.bisect_tag;
    const std::int32_t a = e.v[0], b = e.v[k];
    const std::int64_t key = edge_key(a, b);
    auto it = edge_mid.find(key);
    std::int32_t z;
    if (it != edge_mid.end()) {
      z = it->second;
    } else {
      Point mid;
      for (int c = 0; c < 3; ++c)
        mid[c] = 0.5 * (out.vertices_[a][c] + out.vertices_[b][c]);
      z = static_cast<std::int32_t>(out.vertices_.size());
      out.vertices_.push_back(mid);
      edge_mid.emplace(key, z);
    }

    Element c1 = e, c2 = e;
    c1.v[k] = z;
    for (int i = 0; i < k; ++i) c2.v[i] = e.v[i + 1];
    c2.v[k] = z;
    const std::int8_t child_tag =
        static_cast<std::int8_t>(k > 1 ? k - 1 : dim);
    c1.bisect_tag = c2.bisect_tag = child_tag;
    c1.generation = c2.generation = e.generation + 1;

    out.elements_[id] = c1;
    out.elements_.push_back(c2);
    out.parents_.push_back(out.parents_[id]);
  };

  std::vector<int> worklist(marked);
  std::sort(worklist.begin(), worklist.end());
  worklist.erase(std::unique(worklist.begin(), worklist.end()),
                 worklist.end());

  for (int pass = 0; !worklist.empty(); ++pass) {
    if (pass > 1000)
      throw InvariantError("refine_marked: conforming closure did not "
                           "terminate (incompatible input mesh?)");
    for (int id : worklist) bisect(id);

    // Closure: any element still containing a split edge hangs the midpoint
    // and must be bisected as well.
    worklist.clear();
    for (int id = 0; id < static_cast<int>(out.elements_.size()); ++id) {
      const Element& e = out.elements_[id];
      bool hanging = false;
      for (int i = 0; i <= dim && !hanging; ++i)
        for (int j = i + 1; j <= dim && !hanging; ++j)
          hanging = edge_mid.count(edge_key(e.v[i], e.v[j])) > 0;
      if (hanging) worklist.push_back(id);
    }
  }

  out.finalize();
  return out;
}

SpaceTimeMesh refine_uniform(const SpaceTimeMesh& mesh) {
  std::vector<int> all(mesh.num_elements());
  std::iota(all.begin(), all.end(), 0);
  return refine_marked(mesh, all);
}

MeshAudit audit_mesh(const SpaceTimeMesh& mesh) {
  MeshAudit a;
  const int dim = mesh.dim();

  std::array<double, 3> lo{}, hi{};
  for (int c = 0; c < dim; ++c) {
    lo[c] = std::numeric_limits<double>::infinity();
    hi[c] = -lo[c];
  }
  for (int v = 0; v < mesh.num_vertices(); ++v)
    for (int c = 0; c < dim; ++c) {
      lo[c] = std::min(lo[c], mesh.vertex(v)[c]);
      hi[c] = std::max(hi[c], mesh.vertex(v)[c]);
    }

  for (int k = 0; k < mesh.num_elements(); ++k) {
    const double vol = mesh.element_volume(k);
    a.volume += vol;
    if (!(vol > 0.0)) {
      a.positive_volumes = false;
      if (a.detail.empty())
        a.detail = "element " + std::to_string(k) + " has non-positive volume";
    }
    // inradius r = dim*V / sum of facet measures
    double fsum = 0.0;
    for (int skip = 0; skip <= dim; ++skip) {
      std::array<std::int32_t, 3> f{-1, -1, -1};
      int n = 0;
      for (int i = 0; i <= dim; ++i)
        if (i != skip) f[n++] = mesh.element(k).v[i];
      double m = 0.0;
      if (dim == 2) {
        m = dist(mesh.vertex(f[0]), mesh.vertex(f[1]), 2);
      } else {
        const Point &p = mesh.vertex(f[0]), &q = mesh.vertex(f[1]),
                    &r = mesh.vertex(f[2]);
        const double u0 = q[0] - p[0], u1 = q[1] - p[1], u2 = q[2] - p[2];
        const double v0 = r[0] - p[0], v1 = r[1] - p[1], v2 = r[2] - p[2];
        m = 0.5 * std::sqrt(sqr(u1 * v2 - u2 * v1) + sqr(u2 * v0 - u0 * v2) +
                            sqr(u0 * v1 - u1 * v0));
      }
      fsum += m;
    }
    const double inradius = dim * vol / fsum;
    a.min_shape_ratio = std::min(a.min_shape_ratio,
                                 2.0 * inradius / mesh.element_diameter(k));
  }

  for (int fi = 0; fi < mesh.num_facets(); ++fi) {
    const Facet& f = mesh.facet(fi);
    if (!f.boundary()) continue;
    switch (f.tag) {
      case BoundaryTag::Lateral: ++a.n_lateral; break;
      case BoundaryTag::Bottom: ++a.n_bottom; break;
      case BoundaryTag::Top: ++a.n_top; break;
    }
    // On a box cylinder every boundary facet is contained in one box face;
    // a geometrically interior facet with single incidence means a hanging
    // node slipped through.
    bool on_box = false;
    for (int c = 0; c < dim && !on_box; ++c)
      for (double val : {lo[c], hi[c]}) {
        bool all = true;
        for (int n = 0; n < dim; ++n)
          all = all && mesh.vertex(f.v[n])[c] == val;
        if (all) {
          on_box = true;
          break;
        }
      }
    if (!on_box) {
      a.boundary_closed = false;
      a.conforming = false;
      if (a.detail.empty())
        a.detail = "boundary facet " + std::to_string(fi) +
                   " does not lie on the domain boundary (hanging node?)";
    }
  }
  return a;
}

void write_mesh(std::ostream& out, const SpaceTimeMesh& mesh) {
  const int dim = mesh.dim();
  out << "stfem-mesh " << dim << ' ' << mesh.num_vertices() << ' '
      << mesh.num_elements() << '\n';
  char buf[96];
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const Point& p = mesh.vertex(v);
    if (dim == 2)
      std::snprintf(buf, sizeof buf, "%.17g %.17g", p[0], p[1]);
    else
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", p[0], p[1], p[2]);
    out << buf << '\n';
  }
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const Element& e = mesh.element(k);
    for (int i = 0; i <= dim; ++i) out << e.v[i] << ' ';
    out << e.subdomain << '\n';
  }
}

SpaceTimeMesh read_mesh(std::istream& in) {
  std::string magic;
  int dim = 0, nvert = 0, nelem = 0;
  if (!(in >> magic >> dim >> nvert >> nelem) || magic != "stfem-mesh")
    throw ConfigError("mesh file: expected header 'stfem-mesh <dim> <nvert> <nelem>'");
  if (dim != 2 && dim != 3)
    throw ConfigError("mesh file: dimension must be 2 or 3");
  if (nvert < dim + 1 || nelem < 1)
    throw ConfigError("mesh file: implausible vertex/element counts");

  SpaceTimeMesh mesh;
  mesh.dim_ = dim;
  mesh.vertices_.resize(nvert);
  for (int v = 0; v < nvert; ++v) {
    Point p{0.0, 0.0, 0.0};
    for (int c = 0; c < dim; ++c)
      if (!(in >> p[c]))
        throw ConfigError("mesh file: bad coordinate in vertex line " +
                          std::to_string(v + 2));
    mesh.vertices_[v] = p;
  }
  mesh.elements_.resize(nelem);
  for (int k = 0; k < nelem; ++k) {
    Element e;
    for (int i = 0; i <= dim; ++i)
      if (!(in >> e.v[i]))
        throw ConfigError("mesh file: bad vertex id in element line " +
                          std::to_string(nvert + k + 2));
    if (!(in >> e.subdomain))
      throw ConfigError("mesh file: missing subdomain tag in element line " +
                        std::to_string(nvert + k + 2));
    e.bisect_tag = static_cast<std::int8_t>(dim);  // re-read meshes restart as
    e.generation = 0;                              // bisection roots
    mesh.elements_[k] = e;
  }
  try {
    mesh.finalize();
  } catch (const InvalidInput& err) {
    throw ConfigError(std::string("mesh file: ") + err.what());
  }
  return mesh;
}

void write_mesh_file(const std::string& path, const SpaceTimeMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open mesh file for writing: " + path);
  write_mesh(out, mesh);
}

SpaceTimeMesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file: " + path);
  return read_mesh(in);
}

}  // namespace stfem

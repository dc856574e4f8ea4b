#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "stfem/common.hpp"

namespace stfem {

/// Classification of boundary facets of the space-time cylinder Q = Omega x (0,T).
enum class BoundaryTag : std::uint8_t {
  Lateral = 0,  ///< dOmega x (0,T)
  Bottom = 1,   ///< Omega x {0}
  Top = 2,      ///< Omega x {T}
};

struct Element {
  /// Vertex ids in bisection bookkeeping order (dim+1 entries used).
  std::array<std::int32_t, 4> v{-1, -1, -1, -1};
  std::int32_t subdomain = 1;
  std::int32_t generation = 0;
  std::int8_t bisect_tag = 0;  ///< in {1..dim}; refinement edge is v[0]-v[bisect_tag]
  /// Stored order can have negative orientation; the geometric accessors swap
  /// the first two vertices when this is set so mapped elements always have
  /// positive Jacobian determinant.
  bool flip = false;
};

struct Facet {
  std::array<std::int32_t, 3> v{-1, -1, -1};  ///< sorted vertex ids (dim entries used)
  std::int32_t elem0 = -1;
  std::int32_t elem1 = -1;  ///< -1 for boundary facets
  BoundaryTag tag = BoundaryTag::Lateral;

  bool boundary() const { return elem1 < 0; }
};

/// Conforming simplicial mesh of a space-time box cylinder. dim = d+1 where d
/// is the spatial dimension; the last coordinate is time. Meshes are built
/// once (box constructor, refinement, file reader) and treated as immutable
/// afterwards; refinement returns a new mesh value.
class SpaceTimeMesh {
 public:
  int dim() const { return dim_; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }
  int num_facets() const { return static_cast<int>(facets_.size()); }

  const Point& vertex(int id) const { return vertices_[id]; }
  const Element& element(int k) const { return elements_[k]; }
  const Facet& facet(int f) const { return facets_[f]; }
  const std::vector<Facet>& facets() const { return facets_; }

  /// Vertex id at geometric position i of element k (orientation corrected).
  std::int32_t elem_vertex(int k, int i) const {
    const Element& e = elements_[k];
    if (e.flip && i < 2) i = 1 - i;
    return e.v[i];
  }
  Point elem_vertex_coords(int k, int i) const {
    return vertices_[elem_vertex(k, i)];
  }

  double element_volume(int k) const;
  /// Largest vertex-to-vertex distance of element k.
  double element_diameter(int k) const;
  double h_max() const;
  double h_min() const;
  double total_volume() const;

  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }

  /// Elements sharing at least one vertex with k (k itself included), sorted.
  std::vector<int> neighborhood(int k) const;
  const std::vector<int>& vertex_elements(int vid) const {
    return vertex_to_elements_[vid];
  }

  /// Index of the coarse-mesh element each element descends from; empty for
  /// meshes that are not the product of refine_marked.
  const std::vector<std::int32_t>& parents() const { return parents_; }

  friend SpaceTimeMesh box_mesh(int d,
                                const std::vector<std::pair<double, double>>& extents,
                                const std::vector<int>& subdivisions,
                                const std::function<int(const Point&)>& classifier);
  friend SpaceTimeMesh refine_marked(const SpaceTimeMesh& mesh,
                                     const std::vector<int>& marked);
  friend SpaceTimeMesh read_mesh(std::istream& in);

 private:
  void finalize();  // orientation flags, facets, adjacency, t extent

  int dim_ = 0;
  std::vector<Point> vertices_;
  std::vector<Element> elements_;
  std::vector<Facet> facets_;
  std::vector<std::vector<int>> vertex_to_elements_;
  std::vector<std::int32_t> parents_;
  double t_min_ = 0.0, t_max_ = 0.0;
};

/// Kuhn triangulation of the box prod_i (extents[i].first, extents[i].second)
/// with subdivisions[i] cells per axis. d is the spatial dimension (1 or 2);
/// extents and subdivisions have d+1 entries, time last. Every cell is cut
/// into (d+1)! simplices sharing the cell diagonal, which makes the mesh
/// compatible for bisection refinement. The classifier assigns subdomain ids
/// from element centroids; pass nullptr for a single subdomain.
SpaceTimeMesh box_mesh(int d,
                       const std::vector<std::pair<double, double>>& extents,
                       const std::vector<int>& subdivisions,
                       const std::function<int(const Point&)>& classifier = nullptr);

/// Bisects every marked element at least once and restores conformity by
/// closure bisections. Returns a new mesh; parents() of the result maps each
/// element to its ancestor in `mesh`.
SpaceTimeMesh refine_marked(const SpaceTimeMesh& mesh,
                            const std::vector<int>& marked);

/// Uniform refinement: every element bisected once (no closure is needed on
/// compatible meshes, so the element count exactly doubles).
SpaceTimeMesh refine_uniform(const SpaceTimeMesh& mesh);

struct MeshAudit {
  bool conforming = true;
  bool positive_volumes = true;
  bool boundary_closed = true;  ///< boundary facets lie on the box boundary
  double volume = 0.0;
  double min_shape_ratio = 1.0;  ///< min over elements of 2*inradius/diameter
  int n_lateral = 0, n_bottom = 0, n_top = 0;
  std::string detail;  ///< first failure, empty when all checks pass

  bool ok() const { return conforming && positive_volumes && boundary_closed; }
};

/// Structural health check: facet incidence, orientation, boundary closure.
MeshAudit audit_mesh(const SpaceTimeMesh& mesh);

/// Plain-text mesh format:
///   stfem-mesh <dim> <nvert> <nelem>
///   <nvert lines of dim coordinates>
///   <nelem lines of dim+1 vertex ids and a subdomain tag>
/// Coordinates are written with 17 significant digits so write/read
/// round-trips reproduce the mesh bit for bit.
void write_mesh(std::ostream& out, const SpaceTimeMesh& mesh);
SpaceTimeMesh read_mesh(std::istream& in);
void write_mesh_file(const std::string& path, const SpaceTimeMesh& mesh);
SpaceTimeMesh read_mesh_file(const std::string& path);

}  // namespace stfem

#pragma once

#include "vemsad/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace vemsad {

enum class FaceTag : std::uint8_t { interior, untagged, dirichlet, neumann };

struct Edge {
  std::array<int, 2> vertices{};
  double length = 0.0;
  Vec3 midpoint = Vec3::Zero();
};

/// Planar polygon. The vertex loop is counter-clockwise about `normal`.
/// Interior faces point from the lower to the higher cell index, boundary
/// faces point outward.
struct Face {
  std::vector<int> vertices;
  std::vector<int> edges;  // edges[i] joins vertices[i] and vertices[i+1]
  std::array<int, 2> cells{-1, -1};
  Vec3 normal = Vec3::Zero();
  Vec3 centroid = Vec3::Zero();
  double area = 0.0;
  double diameter = 0.0;

  bool on_boundary() const { return cells[1] < 0; }
};

struct Cell {
  std::vector<int> faces;
  std::vector<int> orientation;  // +1 if faces[i].normal points out of the cell
  std::vector<int> vertices;     // sorted global ids
  std::vector<int> edges;        // sorted global ids
  Vec3 centroid = Vec3::Zero();
  double volume = 0.0;
  double diameter = 0.0;
};

using BoundaryTags = std::vector<FaceTag>;
using BoundaryPredicate = std::function<FaceTag(const Vec3& face_centroid)>;

/// Immutable polyhedral mesh with its geometric cache. Construct through
/// `from_topology`/`from_polyhedra`; both validate every invariant.
class PolyMesh {
 public:
  PolyMesh() = default;

  /// Faces are vertex loops in any orientation, cells list face ids.
  static PolyMesh from_topology(std::vector<Vec3> vertices,
                                std::vector<std::vector<int>> faces,
                                std::vector<std::vector<int>> cells);

  /// Cells given as lists of vertex loops; shared faces are merged.
  static PolyMesh from_polyhedra(std::vector<Vec3> vertices,
                                 const std::vector<std::vector<std::vector<int>>>& cells);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Cell>& cells() const { return cells_; }

  const Vec3& vertex(int i) const { return vertices_[i]; }
  const Edge& edge(int i) const { return edges_[i]; }
  const Face& face(int i) const { return faces_[i]; }
  const Cell& cell(int i) const { return cells_[i]; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }

  std::vector<int> boundary_faces() const;
  double total_volume() const;
  double max_cell_diameter() const;

  const BoundaryTags& boundary_tags() const { return tags_; }
  void set_boundary_tags(BoundaryTags tags);

 private:
  void build_edges();
  void orient_and_measure();
  void validate() const;

  std::vector<Vec3> vertices_;
  std::vector<Edge> edges_;
  std::vector<Face> faces_;
  std::vector<Cell> cells_;
  BoundaryTags tags_;
};

struct Box {
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Ones();
};

enum class StructuredKind { hex, prism };

/// n^3 hexahedra, or 2 n^3 triangular prisms (each hexahedron split along
/// the same xy diagonal).
PolyMesh build_structured_mesh(StructuredKind kind, int n, const Box& domain = {});

/// Tags every boundary face through `predicate` (applied to the face centroid).
/// Throws EmptyDirichletError when no face ends up Dirichlet.
BoundaryTags tag_boundary(const PolyMesh& mesh, const BoundaryPredicate& predicate);
PolyMesh classify_boundary(PolyMesh mesh, const BoundaryPredicate& predicate);

struct CellRegularity {
  bool star_shaped_ok = false;  // ball of radius rho*h_P around x_P in the kernel
  bool face_ok = false;         // disk of radius rho*h_P around each face centroid
  bool edge_ok = false;         // every edge at least rho*h_P long
  double inradius_ratio = 0.0;  // min distance from x_P to a face plane over h_P
  double min_edge_ratio = 0.0;
};

/// Diagnostic for the mesh-regularity assumptions; never throws on a bad cell.
/// The face test uses rho*h_P (not rho*h_f).
std::vector<CellRegularity> check_regularity(const PolyMesh& mesh, double rho);

}  // namespace vemsad

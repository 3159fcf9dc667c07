#include "vemsad/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <queue>
#include <set>
#include <string>

namespace vemsad {

namespace {

constexpr double kPlanarityTol = 1e-10;
constexpr double kClosureTol = 1e-12;

std::string where(const char* what, int id) { return std::string(what) + " " + std::to_string(id); }

// Area vector (Newell), centroid and diameter of a polygon loop.
void measure_face(const std::vector<Vec3>& xs, Face& face) {
  const auto n = face.vertices.size();
  Vec3 area_vec = Vec3::Zero();
  Vec3 mean = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = xs[face.vertices[i]];
    const Vec3& b = xs[face.vertices[(i + 1) % n]];
    area_vec += a.cross(b);
    mean += a;
  }
  area_vec *= 0.5;
  mean /= static_cast<double>(n);
  const double area = area_vec.norm();
  double diam = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      diam = std::max(diam, (xs[face.vertices[i]] - xs[face.vertices[j]]).norm());
  if (!(area > 1e-14 * diam * diam) || diam == 0.0) throw GeometryError("degenerate face (zero area)");
  const Vec3 normal = area_vec / area;

  Vec3 centroid = Vec3::Zero();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = xs[face.vertices[i]];
    const Vec3& b = xs[face.vertices[(i + 1) % n]];
    const double t = 0.5 * (a - mean).cross(b - mean).dot(normal);
    centroid += t * (mean + a + b) / 3.0;
    total += t;
  }
  centroid /= total;

  double off_plane = 0.0;
  for (int v : face.vertices) off_plane = std::max(off_plane, std::abs((xs[v] - centroid).dot(normal)));
  if (off_plane > kPlanarityTol * diam)
  {
    std::ostringstream msg;
    msg << "non-planar face: vertex off plane by " << off_plane << " (face diameter " << diam << ")";
    throw GeometryError(msg.str());
  }

  face.normal = normal;
  face.area = area;
  face.centroid = centroid;
  face.diameter = diam;
}

void reverse_loop(Face& face) {
  std::reverse(face.vertices.begin(), face.vertices.end());
  // edges[i] joined v[i], v[i+1]; after reversal v'[i] = v[n-1-i].
  const auto n = face.edges.size();
  std::vector<int> edges(n);
  for (std::size_t i = 0; i < n; ++i) edges[i] = face.edges[(2 * n - 2 - i) % n];
  face.edges = std::move(edges);
  face.normal = -face.normal;
}

}  // namespace

PolyMesh PolyMesh::from_polyhedra(std::vector<Vec3> vertices,
                                  const std::vector<std::vector<std::vector<int>>>& cells) {
  std::map<std::vector<int>, int> face_ids;
  std::vector<std::vector<int>> faces;
  std::vector<std::vector<int>> cell_faces;
  cell_faces.reserve(cells.size());
  for (const auto& polyhedron : cells) {
    std::vector<int> ids;
    for (const auto& loop : polyhedron) {
      std::vector<int> key = loop;
      std::sort(key.begin(), key.end());
      auto [it, inserted] = face_ids.try_emplace(key, static_cast<int>(faces.size()));
      if (inserted) faces.push_back(loop);
      ids.push_back(it->second);
    }
    cell_faces.push_back(std::move(ids));
  }
  return from_topology(std::move(vertices), std::move(faces), std::move(cell_faces));
}

PolyMesh PolyMesh::from_topology(std::vector<Vec3> vertices, std::vector<std::vector<int>> faces,
                                 std::vector<std::vector<int>> cells) {
  PolyMesh mesh;
  mesh.vertices_ = std::move(vertices);
  const int nv = mesh.num_vertices();

  mesh.faces_.resize(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    auto& loop = faces[f];
    if (loop.size() < 3) throw TopologyError(where("fewer than 3 vertices on face", static_cast<int>(f)));
    std::vector<int> sorted = loop;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw TopologyError(where("repeated vertex on face", static_cast<int>(f)));
    for (int v : loop)
      if (v < 0 || v >= nv) throw TopologyError(where("invalid vertex index on face", static_cast<int>(f)));
    mesh.faces_[f].vertices = std::move(loop);
  }

  mesh.cells_.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].size() < 4) throw TopologyError(where("fewer than 4 faces on cell", static_cast<int>(c)));
    for (int f : cells[c]) {
      if (f < 0 || f >= mesh.num_faces()) throw TopologyError(where("invalid face index on cell", static_cast<int>(c)));
      auto& owners = mesh.faces_[f].cells;
      if (owners[0] < 0) {
        owners[0] = static_cast<int>(c);
      } else if (owners[1] < 0 && owners[0] != static_cast<int>(c)) {
        owners[1] = static_cast<int>(c);
      } else {
        throw TopologyError(where("face shared by more than two cells (or listed twice):", f));
      }
    }
    mesh.cells_[c].faces = cells[c];
  }
  for (int f = 0; f < mesh.num_faces(); ++f) {
    if (mesh.faces_[f].cells[0] < 0) throw TopologyError(where("dangling face", f));
    auto& owners = mesh.faces_[f].cells;
    if (owners[1] >= 0 && owners[1] < owners[0]) std::swap(owners[0], owners[1]);
  }

  mesh.build_edges();
  for (auto& face : mesh.faces_) measure_face(mesh.vertices_, face);
  mesh.orient_and_measure();
  mesh.validate();
  mesh.tags_.assign(mesh.faces_.size(), FaceTag::interior);
  for (int f = 0; f < mesh.num_faces(); ++f)
    if (mesh.faces_[f].on_boundary()) mesh.tags_[f] = FaceTag::untagged;
  return mesh;
}

void PolyMesh::build_edges() {
  std::map<std::pair<int, int>, int> ids;
  for (auto& face : faces_) {
    const auto n = face.vertices.size();
    face.edges.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      int a = face.vertices[i];
      int b = face.vertices[(i + 1) % n];
      auto key = std::minmax(a, b);
      auto [it, inserted] = ids.try_emplace({key.first, key.second}, static_cast<int>(edges_.size()));
      if (inserted) {
        Edge e;
        e.vertices = {key.first, key.second};
        e.length = (vertices_[a] - vertices_[b]).norm();
        e.midpoint = 0.5 * (vertices_[a] + vertices_[b]);
        if (!(e.length > 0.0)) throw GeometryError("zero-length edge");
        edges_.push_back(e);
      }
      face.edges[i] = it->second;
    }
  }
}

void PolyMesh::orient_and_measure() {
  const int nc = num_cells();
  for (int c = 0; c < nc; ++c) {
    Cell& cell = cells_[c];
    const auto nf = cell.faces.size();
    // edge -> (local face, direction)
    std::map<int, std::vector<std::pair<int, int>>> uses;
    for (std::size_t lf = 0; lf < nf; ++lf) {
      const Face& face = faces_[cell.faces[lf]];
      const auto n = face.vertices.size();
      for (std::size_t i = 0; i < n; ++i) {
        int a = face.vertices[i];
        int b = face.vertices[(i + 1) % n];
        uses[face.edges[i]].push_back({static_cast<int>(lf), a < b ? 1 : -1});
      }
    }
    std::vector<std::vector<std::pair<int, int>>> adjacency(nf);  // (neighbor, required relative sign)
    for (const auto& [edge, list] : uses) {
      if (list.size() != 2) throw TopologyError(where("cell boundary is not closed at edge", edge) + " of cell " + std::to_string(c));
      const auto [fa, da] = list[0];
      const auto [fb, db] = list[1];
      // s_a * d_a = -s_b * d_b
      const int rel = -da * db;
      adjacency[fa].push_back({fb, rel});
      adjacency[fb].push_back({fa, rel});
    }
    std::vector<int> sign(nf, 0);
    sign[0] = 1;
    std::queue<int> todo;
    todo.push(0);
    while (!todo.empty()) {
      int f = todo.front();
      todo.pop();
      for (auto [g, rel] : adjacency[f]) {
        const int want = sign[f] * rel;
        if (sign[g] == 0) {
          sign[g] = want;
          todo.push(g);
        } else if (sign[g] != want) {
          throw TopologyError(where("non-orientable boundary on cell", c));
        }
      }
    }
    if (std::find(sign.begin(), sign.end(), 0) != sign.end())
      throw TopologyError(where("disconnected face set on cell", c));
    double vol = 0.0;
    for (std::size_t lf = 0; lf < nf; ++lf) {
      const Face& face = faces_[cell.faces[lf]];
      vol += sign[lf] * face.centroid.dot(face.normal) * face.area / 3.0;
    }
    if (vol < 0.0)
      for (int& s : sign) s = -s;
    cell.orientation = std::move(sign);
  }

  // Global face orientation: lower -> higher cell, boundary outward.
  for (int f = 0; f < num_faces(); ++f) {
    Face& face = faces_[f];
    auto local_sign = [&](int c) {
      const Cell& cell = cells_[c];
      for (std::size_t i = 0; i < cell.faces.size(); ++i)
        if (cell.faces[i] == f) return cell.orientation[i];
      return 0;
    };
    const int s0 = local_sign(face.cells[0]);
    if (face.cells[1] >= 0 && local_sign(face.cells[1]) != -s0)
      throw TopologyError(where("neighbouring cells disagree on orientation of face", f));
    if (s0 < 0) {
      reverse_loop(face);
      for (int c : face.cells) {
        if (c < 0) continue;
        Cell& cell = cells_[c];
        for (std::size_t i = 0; i < cell.faces.size(); ++i)
          if (cell.faces[i] == f) cell.orientation[i] = -cell.orientation[i];
      }
    }
  }

  for (int c = 0; c < num_cells(); ++c) {
    Cell& cell = cells_[c];
    std::set<int> vs;
    std::set<int> es;
    for (int f : cell.faces) {
      vs.insert(faces_[f].vertices.begin(), faces_[f].vertices.end());
      es.insert(faces_[f].edges.begin(), faces_[f].edges.end());
    }
    cell.vertices.assign(vs.begin(), vs.end());
    cell.edges.assign(es.begin(), es.end());

    Vec3 apex = Vec3::Zero();
    for (int v : cell.vertices) apex += vertices_[v];
    apex /= static_cast<double>(cell.vertices.size());

    double volume = 0.0;
    double tet_volume = 0.0;
    Vec3 moment = Vec3::Zero();
    for (std::size_t lf = 0; lf < cell.faces.size(); ++lf) {
      const Face& face = faces_[cell.faces[lf]];
      const int s = cell.orientation[lf];
      volume += s * face.centroid.dot(face.normal) * face.area / 3.0;
      const auto n = face.vertices.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3& a = vertices_[face.vertices[i]];
        const Vec3& b = vertices_[face.vertices[(i + 1) % n]];
        const double v = s * (face.centroid - apex).dot((a - apex).cross(b - apex)) / 6.0;
        tet_volume += v;
        moment += v * (apex + face.centroid + a + b) / 4.0;
      }
    }
    if (!(volume > 0.0)) throw GeometryError(where("non-positive volume on cell", c));
    if (std::abs(volume - tet_volume) > 1e-12 * std::max(1.0, volume) * 10.0)
      throw GeometryError(where("inconsistent volume on cell", c));
    cell.volume = volume;
    cell.centroid = moment / tet_volume;
    double diam = 0.0;
    for (std::size_t i = 0; i < cell.vertices.size(); ++i)
      for (std::size_t j = i + 1; j < cell.vertices.size(); ++j)
        diam = std::max(diam, (vertices_[cell.vertices[i]] - vertices_[cell.vertices[j]]).norm());
    cell.diameter = diam;
  }
}

void PolyMesh::validate() const {
  for (int c = 0; c < num_cells(); ++c) {
    const Cell& cell = cells_[c];
    Vec3 closure = Vec3::Zero();
    double surface = 0.0;
    for (std::size_t i = 0; i < cell.faces.size(); ++i) {
      const Face& face = faces_[cell.faces[i]];
      closure += cell.orientation[i] * face.area * face.normal;
      surface += face.area;
    }
    if (closure.norm() > kClosureTol * surface * 10.0)
      throw TopologyError(where("cell surface does not close on cell", c));
    const long euler = static_cast<long>(cell.vertices.size()) - static_cast<long>(cell.edges.size()) +
                       static_cast<long>(cell.faces.size());
    if (euler != 2) throw TopologyError(where("Euler characteristic is not 2 on cell", c));
  }
}

std::vector<int> PolyMesh::boundary_faces() const {
  std::vector<int> out;
  for (int f = 0; f < num_faces(); ++f)
    if (faces_[f].on_boundary()) out.push_back(f);
  return out;
}

double PolyMesh::total_volume() const {
  double v = 0.0;
  for (const auto& c : cells_) v += c.volume;
  return v;
}

double PolyMesh::max_cell_diameter() const {
  double h = 0.0;
  for (const auto& c : cells_) h = std::max(h, c.diameter);
  return h;
}

void PolyMesh::set_boundary_tags(BoundaryTags tags) {
  if (tags.size() != faces_.size()) throw DimensionError("boundary tag vector has wrong length");
  for (int f = 0; f < num_faces(); ++f) {
    const bool boundary = faces_[f].on_boundary();
    if (boundary == (tags[f] == FaceTag::interior))
      throw ConstraintError(where("tag inconsistent with face position:", f));
  }
  tags_ = std::move(tags);
}

BoundaryTags tag_boundary(const PolyMesh& mesh, const BoundaryPredicate& predicate) {
  BoundaryTags tags(mesh.num_faces(), FaceTag::interior);
  bool any_dirichlet = false;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    if (!mesh.face(f).on_boundary()) continue;
    FaceTag t = predicate(mesh.face(f).centroid);
    if (t != FaceTag::dirichlet && t != FaceTag::neumann)
      throw ConstraintError(where("boundary predicate returned no tag for face", f));
    tags[f] = t;
    any_dirichlet = any_dirichlet || t == FaceTag::dirichlet;
  }
  if (!any_dirichlet) throw EmptyDirichletError("no boundary face is tagged Dirichlet");
  return tags;
}

PolyMesh classify_boundary(PolyMesh mesh, const BoundaryPredicate& predicate) {
  mesh.set_boundary_tags(tag_boundary(mesh, predicate));
  return mesh;
}

PolyMesh build_structured_mesh(StructuredKind kind, int n, const Box& domain) {
  if (n < 1) throw DimensionError("structured mesh needs n >= 1");
  const int np = n + 1;
  std::vector<Vec3> xs;
  xs.reserve(static_cast<std::size_t>(np) * np * np);
  const Vec3 step = (domain.upper - domain.lower) / n;
  for (int k = 0; k < np; ++k)
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i)
        xs.push_back(domain.lower + Vec3(i * step.x(), j * step.y(), k * step.z()));
  auto id = [np](int i, int j, int k) { return i + np * (j + np * k); };

  std::vector<std::vector<std::vector<int>>> cells;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int v000 = id(i, j, k), v100 = id(i + 1, j, k), v110 = id(i + 1, j + 1, k), v010 = id(i, j + 1, k);
        const int v001 = id(i, j, k + 1), v101 = id(i + 1, j, k + 1), v111 = id(i + 1, j + 1, k + 1),
                  v011 = id(i, j + 1, k + 1);
        if (kind == StructuredKind::hex) {
          cells.push_back({{v000, v010, v110, v100},
                           {v001, v101, v111, v011},
                           {v000, v100, v101, v001},
                           {v010, v011, v111, v110},
                           {v000, v001, v011, v010},
                           {v100, v110, v111, v101}});
        } else {
          cells.push_back({{v000, v110, v100},
                           {v001, v101, v111},
                           {v000, v100, v101, v001},
                           {v100, v110, v111, v101},
                           {v110, v000, v001, v111}});
          cells.push_back({{v000, v010, v110},
                           {v001, v111, v011},
                           {v110, v010, v011, v111},
                           {v010, v000, v001, v011},
                           {v000, v110, v111, v001}});
        }
      }
  return PolyMesh::from_polyhedra(std::move(xs), cells);
}

std::vector<CellRegularity> check_regularity(const PolyMesh& mesh, double rho) {
  std::vector<CellRegularity> report(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    const double h = cell.diameter;
    CellRegularity r;
    double inradius = std::numeric_limits<double>::infinity();
    double face_radius = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cell.faces.size(); ++i) {
      const Face& face = mesh.face(cell.faces[i]);
      inradius = std::min(inradius, cell.orientation[i] * (face.centroid - cell.centroid).dot(face.normal));
      const auto n = face.vertices.size();
      for (std::size_t k = 0; k < n; ++k) {
        const Vec3& a = mesh.vertex(face.vertices[k]);
        const Vec3& b = mesh.vertex(face.vertices[(k + 1) % n]);
        const Vec3 inward = face.normal.cross(b - a).normalized();
        face_radius = std::min(face_radius, (face.centroid - a).dot(inward));
      }
    }
    double min_edge = std::numeric_limits<double>::infinity();
    for (int e : cell.edges) min_edge = std::min(min_edge, mesh.edge(e).length);
    r.inradius_ratio = inradius / h;
    r.min_edge_ratio = min_edge / h;
    r.star_shaped_ok = inradius >= rho * h;
    r.face_ok = face_radius >= rho * h;
    r.edge_ok = min_edge >= rho * h;
    report[c] = r;
  }
  return report;
}

}  // namespace vemsad

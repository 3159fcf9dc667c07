#include "support/meshes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iterator>
#include <limits>
#include <map>

namespace vemsad::testing {

PolyMesh single_box(const Vec3& lower, const Vec3& upper) {
  return build_structured_mesh(StructuredKind::hex, 1, Box{lower, upper});
}

PolyMesh single_prism(double shear) {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {shear, 0, 1}, {1 + shear, 0, 1}, {shear, 1, 1}};
  return PolyMesh::from_polyhedra(v, {{{0, 2, 1}, {3, 4, 5}, {0, 1, 4, 3}, {1, 2, 5, 4}, {2, 0, 3, 5}}});
}

PolyMesh single_tetrahedron() {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  return PolyMesh::from_polyhedra(v, {{{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {2, 0, 3}}});
}

PolyMesh cube_with_split_edge(double t) {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}, {0, 0, t}};
  // vertex 8 splits the edge 0-4
  return PolyMesh::from_polyhedra(v, {{{0, 3, 2, 1},
                                       {4, 5, 6, 7},
                                       {0, 1, 5, 4, 8},
                                       {1, 2, 6, 5},
                                       {2, 3, 7, 6},
                                       {3, 0, 8, 4, 7}}});
}

namespace {

// Voronoi cells are clipped from the unit box. Every vertex remembers the
// three planes it lies on, so its coordinates are recomputed from exactly
// the same data in every cell that shares it (bitwise identical welds).
struct Plane {
  Vec3 n;
  double d;  // n.x = d
};

struct Corner {
  Vec3 x;
  std::array<int, 3> planes;  // sorted
};

struct Polygon {
  int plane;
  std::vector<Corner> corners;
};

class PlaneSet {
 public:
  explicit PlaneSet(std::vector<Vec3> seeds) : seeds_(std::move(seeds)) {}

  static constexpr int kBox = 6;
  int bisector(int i, int j) const {
    if (i > j) std::swap(i, j);
    return kBox + i * static_cast<int>(seeds_.size()) + j;
  }
  Plane plane(int id) const {
    if (id < kBox) return {Vec3::Unit(id % 3), id < 3 ? 0.0 : 1.0};
    const int i = (id - kBox) / static_cast<int>(seeds_.size());
    const int j = (id - kBox) % static_cast<int>(seeds_.size());
    const Vec3 n = seeds_[j] - seeds_[i];
    return {n, n.dot(0.5 * (seeds_[i] + seeds_[j]))};
  }
  Vec3 corner(const std::array<int, 3>& ids) const {
    Mat3 a;
    Vec3 b;
    for (int k = 0; k < 3; ++k) {
      const Plane p = plane(ids[k]);
      a.row(k) = p.n.transpose();
      b[k] = p.d;
    }
    return a.fullPivLu().solve(b);
  }
  const std::vector<Vec3>& seeds() const { return seeds_; }

 private:
  std::vector<Vec3> seeds_;
};

std::array<int, 3> sorted3(int a, int b, int c) {
  std::array<int, 3> r{a, b, c};
  std::sort(r.begin(), r.end());
  return r;
}

// Clip by {x : s (n.x - d) <= 0} for the plane `id`.
std::vector<Polygon> clip(const PlaneSet& planes, const std::vector<Polygon>& poly, int id, double sign) {
  const Plane pl = planes.plane(id);
  const double tol = 1e-13 * pl.n.norm();
  auto dist = [&](const Vec3& x) { return sign * (pl.n.dot(x) - pl.d); };
  std::vector<Polygon> out;
  std::vector<Corner> cap;
  for (const Polygon& p : poly) {
    Polygon q{p.plane, {}};
    const std::size_t m = p.corners.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Corner& a = p.corners[i];
      const Corner& b = p.corners[(i + 1) % m];
      const double da = dist(a.x);
      const double db = dist(b.x);
      if (da <= tol) q.corners.push_back(a);
      if (std::abs(da) <= tol) cap.push_back(a);
      if ((da < -tol && db > tol) || (da > tol && db < -tol)) {
        std::vector<int> common;
        std::set_intersection(a.planes.begin(), a.planes.end(), b.planes.begin(), b.planes.end(),
                              std::back_inserter(common));
        Corner c;
        if (common.size() == 2) {
          c.planes = sorted3(common[0], common[1], id);
          c.x = planes.corner(c.planes);
        } else {
          c.planes = sorted3(p.plane, id, -1);
          c.x = a.x + (b.x - a.x) * (da / (da - db));
        }
        q.corners.push_back(c);
        cap.push_back(c);
      }
    }
    if (q.corners.size() >= 3) out.push_back(std::move(q));
  }
  std::vector<Corner> pts;
  for (const Corner& x : cap)
    if (std::none_of(pts.begin(), pts.end(), [&](const Corner& y) { return (x.x - y.x).norm() < 1e-12; }))
      pts.push_back(x);
  if (pts.size() >= 3) {
    Vec3 c = Vec3::Zero();
    for (const Corner& x : pts) c += x.x;
    c /= static_cast<double>(pts.size());
    const Vec3 n = sign * pl.n.normalized();
    const Vec3 t1 = (pts[0].x - c).normalized();
    const Vec3 t2 = n.cross(t1);
    auto angle = [&](const Corner& a) { return std::atan2((a.x - c).dot(t2), (a.x - c).dot(t1)); };
    std::sort(pts.begin(), pts.end(), [&](const Corner& a, const Corner& b) { return angle(a) < angle(b); });
    out.push_back({id, std::move(pts)});
  }
  return out;
}

std::vector<Polygon> box_polygons() {
  // plane ids: 0,1,2 -> x,y,z = 0; 3,4,5 -> x,y,z = 1
  const Vec3 v[8] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  auto planes_of = [&](int k) {
    const Vec3& x = v[k];
    return sorted3(x.x() == 0 ? 0 : 3, x.y() == 0 ? 1 : 4, x.z() == 0 ? 2 : 5);
  };
  const int f[6][4] = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}};
  const int fp[6] = {2, 5, 1, 3, 4, 0};
  std::vector<Polygon> out;
  for (int i = 0; i < 6; ++i) {
    Polygon p{fp[i], {}};
    for (int k : f[i]) p.corners.push_back({v[k], planes_of(k)});
    out.push_back(std::move(p));
  }
  return out;
}

PolyMesh weld(const std::vector<std::vector<Polygon>>& cells) {
  std::vector<Vec3> verts;
  std::map<std::array<int, 3>, int> by_planes;
  auto find = [&](const Corner& c) {
    if (c.planes[0] >= 0) {
      auto it = by_planes.find(c.planes);
      if (it != by_planes.end()) return it->second;
    }
    for (std::size_t i = 0; i < verts.size(); ++i)
      if ((verts[i] - c.x).norm() < 1e-12) return static_cast<int>(i);
    verts.push_back(c.x);
    const int id = static_cast<int>(verts.size() - 1);
    if (c.planes[0] >= 0) by_planes[c.planes] = id;
    return id;
  };
  std::vector<std::vector<std::vector<int>>> topo;
  for (const auto& cell : cells) {
    std::vector<std::vector<int>> loops;
    for (const Polygon& p : cell) {
      std::vector<int> loop;
      for (const Corner& x : p.corners) {
        const int id = find(x);
        if (loop.empty() || loop.back() != id) loop.push_back(id);
      }
      while (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
      if (loop.size() >= 3) loops.push_back(std::move(loop));
    }
    topo.push_back(std::move(loops));
  }
  return PolyMesh::from_polyhedra(std::move(verts), topo);
}

std::vector<Vec3> random_seeds(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  std::vector<Vec3> s(n);
  for (auto& x : s) x = Vec3(u(rng), u(rng), u(rng));
  return s;
}

std::vector<Polygon> voronoi_region(const PlaneSet& planes, int i) {
  std::vector<Polygon> poly = box_polygons();
  const auto& seeds = planes.seeds();
  for (int j = 0; j < static_cast<int>(seeds.size()); ++j) {
    if (j == i) continue;
    poly = clip(planes, poly, planes.bisector(i, j), i < j ? 1.0 : -1.0);
  }
  return poly;
}

}  // namespace

namespace {

double min_face_diameter(const std::vector<std::vector<Polygon>>& cells) {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& cell : cells)
    for (const Polygon& p : cell) {
      double d = 0.0;
      for (const Corner& a : p.corners)
        for (const Corner& b : p.corners) d = std::max(d, (a.x - b.x).norm());
      out = std::min(out, d);
    }
  return out;
}

// Random seeds occasionally produce near-degenerate vertices (tiny faces
// whose planarity is lost in round-off); such seed sets are redrawn.
std::vector<std::vector<Polygon>> voronoi_cells(int n, unsigned seed, bool only_first) {
  const double min_size = 0.02 * std::cbrt(1.0 / n);
  std::mt19937 reseed(seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    auto seeds = random_seeds(n, reseed());
    if (only_first) seeds[0] = Vec3(0.5, 0.5, 0.5);
    const PlaneSet planes(seeds);
    std::vector<std::vector<Polygon>> cells;
    for (int i = 0; i < (only_first ? 1 : n); ++i) cells.push_back(voronoi_region(planes, i));
    if (min_face_diameter(cells) >= min_size) return cells;
  }
  throw GeometryError("could not draw a well-shaped Voronoi tessellation");
}

}  // namespace

PolyMesh voronoi_mesh(int n, unsigned seed) { return weld(voronoi_cells(n, seed, false)); }

PolyMesh voronoi_cell(unsigned seed) { return weld(voronoi_cells(12, seed, true)); }

PolyMesh perforated_cylinder(double r_in, double r_out, double height, int nr, int ntheta, int nz) {
  const double pi = std::acos(-1.0);
  std::vector<Vec3> v;
  auto id = [&](int i, int j, int k) { return i + (nr + 1) * ((j % ntheta) + ntheta * k); };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j < ntheta; ++j)
      for (int i = 0; i <= nr; ++i) {
        const double r = r_in + (r_out - r_in) * i / nr;
        const double t = 2 * pi * j / ntheta;
        v.emplace_back(r * std::cos(t), r * std::sin(t), height * k / nz);
      }
  std::vector<std::vector<std::vector<int>>> cells;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ntheta; ++j)
      for (int i = 0; i < nr; ++i) {
        const int a = id(i, j, k), b = id(i + 1, j, k), c = id(i + 1, j + 1, k), d = id(i, j + 1, k);
        const int e = id(i, j, k + 1), f = id(i + 1, j, k + 1), g = id(i + 1, j + 1, k + 1), h = id(i, j + 1, k + 1);
        cells.push_back({{a, d, c, b}, {e, f, g, h}, {a, b, f, e}, {b, c, g, f}, {c, d, h, g}, {d, a, e, h}});
      }
  return PolyMesh::from_polyhedra(std::move(v), cells);
}

PolyMesh random_affine(const PolyMesh& mesh, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  Mat3 a = Mat3::Identity();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) += u(rng);
  const Vec3 b(u(rng), u(rng), u(rng));
  std::vector<Vec3> v;
  for (const Vec3& x : mesh.vertices()) v.push_back(a * x + b);
  std::vector<std::vector<int>> faces, cells;
  for (const auto& f : mesh.faces()) faces.push_back(f.vertices);
  for (const auto& c : mesh.cells()) cells.push_back(c.faces);
  return PolyMesh::from_topology(std::move(v), std::move(faces), std::move(cells));
}

}  // namespace vemsad::testing

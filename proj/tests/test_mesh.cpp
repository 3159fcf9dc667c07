#include "support/meshes.hpp"
#include "vemsad/mesh_io.hpp"
#include "vemsad/poly.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace vemsad;
using namespace vemsad::testing;

namespace {

const char* kCubeJson = R"({
  "vertices": [[0,0,0],[1,0,0],[1,1,0],[0,1,0],[0,0,1],[1,0,1],[1,1,1],[0,1,1]],
  "faces": [[0,3,2,1],[4,5,6,7],[0,1,5,4],[1,2,6,5],[2,3,7,6],[3,0,4,7]],
  "cells": [[0,1,2,3,4,5]]
})";

FaceTag example1_predicate(const Vec3& x) {
  const double tol = 1e-12;
  return (std::abs(x.x() - 1) < tol || std::abs(x.y() - 1) < tol || std::abs(x.z() - 1) < tol) ? FaceTag::neumann
                                                                                                 : FaceTag::dirichlet;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("vemsad_test_" + name);
}

}  // namespace

TEST(Mesh, UnitCubeTopology) {
  const PolyMesh mesh = parse_json_mesh(kCubeJson);
  EXPECT_EQ(mesh.num_vertices(), 8);
  EXPECT_EQ(mesh.num_edges(), 12);
  EXPECT_EQ(mesh.num_faces(), 6);
  EXPECT_EQ(mesh.num_cells(), 1);
  EXPECT_NEAR(mesh.cell(0).volume, 1.0, 1e-14);
  EXPECT_NEAR(mesh.cell(0).diameter, std::sqrt(3.0), 1e-14);
}

TEST(Mesh, MissingFaceIsTopologyError) {
  const char* open = R"({
    "vertices": [[0,0,0],[1,0,0],[1,1,0],[0,1,0],[0,0,1],[1,0,1],[1,1,1],[0,1,1]],
    "faces": [[0,3,2,1],[4,5,6,7],[0,1,5,4],[1,2,6,5],[2,3,7,6]],
    "cells": [[0,1,2,3,4]]
  })";
  EXPECT_THROW(parse_json_mesh(open), TopologyError);
}

TEST(Mesh, DanglingFaceAndBadIndices) {
  const char* dangling = R"({
    "vertices": [[0,0,0],[1,0,0],[1,1,0],[0,1,0],[0,0,1],[1,0,1],[1,1,1],[0,1,1]],
    "faces": [[0,3,2,1],[4,5,6,7],[0,1,5,4],[1,2,6,5],[2,3,7,6],[3,0,4,7],[0,1,2]],
    "cells": [[0,1,2,3,4,5]]
  })";
  EXPECT_THROW(parse_json_mesh(dangling), TopologyError);
  const char* bad = R"({"vertices": [[0,0,0]], "faces": [[0,1,2]], "cells": [[0]]})";
  EXPECT_THROW(parse_json_mesh(bad), TopologyError);
}

TEST(Mesh, NonPlanarFaceIsGeometryError) {
  std::string text = kCubeJson;
  text.replace(text.find("[1,1,1]"), 7, "[1,1,1.01]");
  EXPECT_THROW(parse_json_mesh(text), GeometryError);
}

TEST(Mesh, MalformedInputIsParseError) {
  EXPECT_THROW(parse_json_mesh("{not json"), ParseError);
  EXPECT_THROW(parse_json_mesh(R"({"vertices": [[0,0]], "faces": [], "cells": []})"), ParseError);
  EXPECT_THROW(parse_off_mesh("OFF\n3 1 0\n0 0 0\n"), ParseError);
  EXPECT_THROW(parse_vtu_mesh("<VTKFile><Nope/></VTKFile>"), ParseError);
  EXPECT_THROW(load_mesh(temp_path("does_not_exist.json")), ParseError);
}

TEST(Mesh, VoronoiVolumeSumsToOne) {
  const PolyMesh mesh = voronoi_mesh(100, 42);
  EXPECT_EQ(mesh.num_cells(), 100);
  EXPECT_NEAR(mesh.total_volume(), 1.0, 1e-10);
}

TEST(Mesh, ClosureAndVolumeInvariants) {
  for (const PolyMesh& mesh : {voronoi_mesh(30, 5), build_structured_mesh(StructuredKind::prism, 2)}) {
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const Cell& cell = mesh.cell(c);
      Vec3 closure = Vec3::Zero();
      double surface = 0.0;
      double vol = 0.0;
      for (std::size_t i = 0; i < cell.faces.size(); ++i) {
        const Face& f = mesh.face(cell.faces[i]);
        closure += cell.orientation[i] * f.area * f.normal;
        surface += f.area;
        vol += cell.orientation[i] * (f.centroid - cell.centroid).dot(f.normal) * f.area / 3.0;
      }
      EXPECT_LE(closure.norm(), 1e-12 * surface);
      EXPECT_NEAR(vol, cell.volume, 1e-12 * cell.volume);
      EXPECT_NEAR(cell_quadrature(mesh, c, 0).total_weight(), cell.volume, 1e-12 * cell.volume);
      EXPECT_EQ(static_cast<int>(cell.vertices.size() - cell.edges.size() + cell.faces.size()), 2);
    }
    for (int e = 0; e < mesh.num_edges(); ++e) EXPECT_GT(mesh.edge(e).length, 0.0);
    for (const Face& f : mesh.faces()) {
      const Cell& owner = mesh.cell(f.cells[0]);
      EXPECT_LE(f.diameter, owner.diameter + 1e-14);
    }
  }
}

TEST(Mesh, StructuredHex) {
  const PolyMesh one = build_structured_mesh(StructuredKind::hex, 1);
  EXPECT_EQ(one.num_cells(), 1);
  EXPECT_NEAR(one.cell(0).volume, 1.0, 1e-14);
  const PolyMesh two = build_structured_mesh(StructuredKind::hex, 2);
  EXPECT_EQ(two.num_cells(), 8);
  for (const Cell& c : two.cells()) {
    EXPECT_NEAR(c.volume, 0.125, 1e-14);
    EXPECT_NEAR(c.diameter, std::sqrt(3.0) / 2, 1e-14);
  }
  const PolyMesh box = build_structured_mesh(StructuredKind::hex, 3, Box{Vec3(-1, 0, 0), Vec3(2, 3, 6)});
  EXPECT_NEAR(box.total_volume(), 54.0, 1e-11);
  EXPECT_NEAR(box.max_cell_diameter(), Vec3(3, 3, 6).norm() / 3, 1e-13);
}

TEST(Mesh, StructuredPrism) {
  const PolyMesh mesh = build_structured_mesh(StructuredKind::prism, 2);
  EXPECT_EQ(mesh.num_cells(), 16);
  EXPECT_NEAR(mesh.total_volume(), 1.0, 1e-12);
}

TEST(Mesh, ClassifyBoundaryExample1) {
  const PolyMesh mesh = classify_boundary(build_structured_mesh(StructuredKind::hex, 1), example1_predicate);
  int nd = 0, nn = 0;
  for (int f : mesh.boundary_faces()) {
    nd += mesh.boundary_tags()[f] == FaceTag::dirichlet;
    nn += mesh.boundary_tags()[f] == FaceTag::neumann;
  }
  EXPECT_EQ(nd, 3);
  EXPECT_EQ(nn, 3);
}

TEST(Mesh, ClassifyBoundaryEdgeCases) {
  const PolyMesh mesh = build_structured_mesh(StructuredKind::hex, 2);
  EXPECT_THROW(classify_boundary(mesh, [](const Vec3&) { return FaceTag::neumann; }), EmptyDirichletError);
  const PolyMesh all = classify_boundary(mesh, [](const Vec3&) { return FaceTag::dirichlet; });
  for (int f = 0; f < all.num_faces(); ++f)
    EXPECT_EQ(all.boundary_tags()[f], all.face(f).on_boundary() ? FaceTag::dirichlet : FaceTag::interior);
}

TEST(Mesh, RegularityDiagnostics) {
  for (const auto& r : check_regularity(single_box(), 0.1)) {
    EXPECT_TRUE(r.star_shaped_ok);
    EXPECT_TRUE(r.face_ok);
    EXPECT_TRUE(r.edge_ok);
  }
  const PolyMesh split = cube_with_split_edge(0.01 * std::sqrt(3.0));
  EXPECT_FALSE(check_regularity(split, 0.1)[0].edge_ok);

  const PolyMesh vor = voronoi_mesh(50, 11);
  const auto report = check_regularity(vor, 0.01);
  int pass = 0, oracle = 0;
  for (int c = 0; c < vor.num_cells(); ++c) {
    pass += report[c].edge_ok;
    bool ok = true;
    for (int e : vor.cell(c).edges) ok = ok && vor.edge(e).length >= 0.01 * vor.cell(c).diameter;
    oracle += ok;
  }
  EXPECT_EQ(pass, oracle);
}

TEST(MeshIO, JsonRoundTripWithTags) {
  const PolyMesh mesh = classify_boundary(build_structured_mesh(StructuredKind::prism, 2), example1_predicate);
  const auto path = temp_path("roundtrip.json");
  save_mesh_json(mesh, path);
  const PolyMesh back = load_mesh(path);
  EXPECT_EQ(back.num_cells(), mesh.num_cells());
  EXPECT_EQ(back.num_faces(), mesh.num_faces());
  EXPECT_EQ(back.boundary_tags(), mesh.boundary_tags());
  std::filesystem::remove(path);
}

TEST(MeshIO, OffRoundTrip) {
  const PolyMesh mesh = voronoi_mesh(20, 3);
  const auto path = temp_path("roundtrip.off");
  save_mesh_off(mesh, path);
  const PolyMesh back = load_mesh(path);
  EXPECT_EQ(back.num_cells(), mesh.num_cells());
  EXPECT_EQ(back.num_edges(), mesh.num_edges());
  EXPECT_NEAR(back.total_volume(), 1.0, 1e-10);
  std::filesystem::remove(path);
}

TEST(MeshIO, VtuRoundTripPolyhedra) {
  const PolyMesh mesh = voronoi_mesh(15, 9);
  const auto path = temp_path("roundtrip.vtu");
  std::vector<double> ids(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) ids[c] = c;
  write_vtu(mesh, path, {{"id", 1, true, ids}});
  const PolyMesh back = load_mesh(path, MeshFormat::vtu);
  EXPECT_EQ(back.num_cells(), mesh.num_cells());
  EXPECT_EQ(back.num_faces(), mesh.num_faces());
  EXPECT_EQ(back.num_vertices(), mesh.num_vertices());
  for (int c = 0; c < mesh.num_cells(); ++c) EXPECT_NEAR(back.cell(c).volume, mesh.cell(c).volume, 1e-14);
  std::filesystem::remove(path);
}

TEST(MeshIO, VtuStandardCells) {
  const char* text = R"(<?xml version="1.0"?>
<VTKFile type="UnstructuredGrid" version="1.0">
 <UnstructuredGrid><Piece NumberOfPoints="9" NumberOfCells="2">
  <Points><DataArray type="Float64" NumberOfComponents="3" format="ascii">
   0 0 0 1 0 0 1 1 0 0 1 0 0 0 1 1 0 1 1 1 1 0 1 1 0.5 0.5 2
  </DataArray></Points>
  <Cells>
   <DataArray type="Int64" Name="connectivity" format="ascii">0 1 2 3 4 5 6 7 4 5 6 7 8</DataArray>
   <DataArray type="Int64" Name="offsets" format="ascii">8 13</DataArray>
   <DataArray type="UInt8" Name="types" format="ascii">12 14</DataArray>
  </Cells>
 </Piece></UnstructuredGrid>
</VTKFile>)";
  const PolyMesh mesh = parse_vtu_mesh(text);
  EXPECT_EQ(mesh.num_cells(), 2);
  EXPECT_EQ(mesh.num_faces(), 10);
  EXPECT_NEAR(mesh.total_volume(), 1.0 + 1.0 / 3.0, 1e-14);
}

TEST(MeshIO, CylinderFileIsValid) {
  const PolyMesh mesh = load_mesh(std::filesystem::path(VEMSAD_DATA_DIR) / "perforated_cylinder.vtu");
  EXPECT_GT(mesh.num_cells(), 0);
  const double pi = std::acos(-1.0);
  EXPECT_NEAR(mesh.total_volume(), pi * (25.0 - 1.0) * 5.0, 0.05 * pi * 24 * 5);
}

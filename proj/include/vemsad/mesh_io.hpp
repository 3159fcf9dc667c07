#pragma once

#include "vemsad/mesh.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace vemsad {

enum class MeshFormat { vtu, off, json };

/// Reads a mesh file. VTU must be ASCII (polyhedron, tetra, hexahedron,
/// wedge or pyramid cells). OFF carries an extra `CELLS n` section listing
/// face ids per cell. The JSON schema is documented in README.md.
PolyMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
/// Format picked from the file extension.
PolyMesh load_mesh(const std::filesystem::path& path);
MeshFormat format_from_extension(const std::filesystem::path& path);

PolyMesh parse_json_mesh(const std::string& text);
PolyMesh parse_off_mesh(const std::string& text);
PolyMesh parse_vtu_mesh(const std::string& text);

void save_mesh_json(const PolyMesh& mesh, const std::filesystem::path& path);
void save_mesh_off(const PolyMesh& mesh, const std::filesystem::path& path);

struct VtuField {
  std::string name;
  int components = 1;
  bool cell_data = true;
  std::vector<double> values;  // components * (cells or points), interleaved
};

/// ASCII VTU with every cell written as a VTK polyhedron.
void write_vtu(const PolyMesh& mesh, const std::filesystem::path& path, const std::vector<VtuField>& fields = {});

}  // namespace vemsad

#include "vemsad/mesh_io.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace vemsad {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open mesh file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class T>
std::vector<T> parse_numbers(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  std::vector<T> out;
  T value;
  while (in >> value) out.push_back(value);
  if (!in.eof()) throw ParseError("malformed numeric data in " + what);
  return out;
}

void apply_json_tags(PolyMesh& mesh, const nlohmann::json& j) {
  if (!j.contains("boundary")) return;
  BoundaryTags tags = mesh.boundary_tags();
  auto mark = [&](const char* key, FaceTag tag) {
    if (!j["boundary"].contains(key)) return;
    for (int f : j["boundary"][key].get<std::vector<int>>()) {
      if (f < 0 || f >= mesh.num_faces() || !mesh.face(f).on_boundary())
        throw ParseError("boundary tag references a non-boundary face");
      tags[f] = tag;
    }
  };
  mark("dirichlet", FaceTag::dirichlet);
  mark("neumann", FaceTag::neumann);
  mesh.set_boundary_tags(std::move(tags));
}

// Face loops of the standard VTK linear cells.
std::vector<std::vector<int>> standard_cell_faces(int type, const std::vector<int>& v) {
  auto pick = [&](std::initializer_list<std::initializer_list<int>> loops) {
    std::vector<std::vector<int>> out;
    for (auto loop : loops) {
      std::vector<int> f;
      for (int i : loop) f.push_back(v.at(i));
      out.push_back(std::move(f));
    }
    return out;
  };
  switch (type) {
    case 10:
      return pick({{0, 1, 3}, {1, 2, 3}, {2, 0, 3}, {0, 2, 1}});
    case 12:
      return pick({{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}});
    case 13:
      return pick({{0, 1, 2}, {3, 5, 4}, {0, 3, 4, 1}, {1, 4, 5, 2}, {2, 5, 3, 0}});
    case 14:
      return pick({{0, 3, 2, 1}, {0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}});
    default:
      throw ParseError("unsupported VTK cell type " + std::to_string(type));
  }
}

}  // namespace

MeshFormat format_from_extension(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".vtu") return MeshFormat::vtu;
  if (ext == ".off") return MeshFormat::off;
  if (ext == ".json") return MeshFormat::json;
  throw ParseError("cannot infer mesh format from extension '" + ext + "'");
}

PolyMesh load_mesh(const std::filesystem::path& path) { return load_mesh(path, format_from_extension(path)); }

PolyMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  const std::string text = read_file(path);
  switch (format) {
    case MeshFormat::vtu:
      return parse_vtu_mesh(text);
    case MeshFormat::off:
      return parse_off_mesh(text);
    case MeshFormat::json:
      return parse_json_mesh(text);
  }
  throw ParseError("unknown mesh format");
}

PolyMesh parse_json_mesh(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON mesh: ") + e.what());
  }
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;
  std::vector<std::vector<int>> cells;
  try {
    for (const auto& v : j.at("vertices")) {
      if (v.size() != 3) throw ParseError("vertex must have 3 coordinates");
      vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    }
    faces = j.at("faces").get<std::vector<std::vector<int>>>();
    cells = j.at("cells").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("JSON mesh schema violation: ") + e.what());
  }
  PolyMesh mesh = PolyMesh::from_topology(std::move(vertices), std::move(faces), std::move(cells));
  apply_json_tags(mesh, j);
  return mesh;
}

PolyMesh parse_off_mesh(const std::string& text) {
  std::istringstream lines(text);
  std::ostringstream clean;
  std::string line;
  while (std::getline(lines, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    clean << line << '\n';
  }
  std::istringstream in(clean.str());
  std::string header;
  if (!(in >> header) || header != "OFF") throw ParseError("OFF file must start with 'OFF'");
  long nv = 0;
  long nf = 0;
  long ne = 0;
  if (!(in >> nv >> nf >> ne) || nv < 0 || nf < 0) throw ParseError("bad OFF counts line");
  std::vector<Vec3> vertices(nv);
  for (auto& v : vertices)
    if (!(in >> v.x() >> v.y() >> v.z())) throw ParseError("truncated OFF vertex list");
  std::vector<std::vector<int>> faces(nf);
  for (auto& f : faces) {
    int k = 0;
    if (!(in >> k) || k < 3) throw ParseError("bad OFF face record");
    f.resize(k);
    for (int& v : f)
      if (!(in >> v)) throw ParseError("truncated OFF face record");
  }
  std::string keyword;
  long nc = 0;
  if (!(in >> keyword) || keyword != "CELLS" || !(in >> nc) || nc < 1)
    throw ParseError("OFF file lacks a 'CELLS n' section");
  std::vector<std::vector<int>> cells(nc);
  for (auto& c : cells) {
    int k = 0;
    if (!(in >> k) || k < 4) throw ParseError("bad OFF cell record");
    c.resize(k);
    for (int& f : c)
      if (!(in >> f)) throw ParseError("truncated OFF cell record");
  }
  return PolyMesh::from_topology(std::move(vertices), std::move(faces), std::move(cells));
}

PolyMesh parse_vtu_mesh(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("invalid VTU XML: ") + e.what());
  }
  const auto piece = tree.get_child_optional("VTKFile.UnstructuredGrid.Piece");
  if (!piece) throw ParseError("VTU file has no UnstructuredGrid Piece");

  auto array_text = [](const pt::ptree& arr, const std::string& what) {
    const std::string fmt = arr.get<std::string>("<xmlattr>.format", "ascii");
    if (fmt != "ascii") throw ParseError("only ascii VTU data arrays are supported (" + what + ")");
    return arr.get_value<std::string>();
  };

  std::vector<double> coords;
  for (const auto& [name, node] : piece->get_child("Points", pt::ptree()))
    if (name == "DataArray") coords = parse_numbers<double>(array_text(node, "Points"), "Points");
  if (coords.empty() || coords.size() % 3 != 0) throw ParseError("VTU Points array missing or malformed");

  std::vector<long> connectivity, offsets, types, faces, faceoffsets;
  for (const auto& [name, node] : piece->get_child("Cells", pt::ptree())) {
    if (name != "DataArray") continue;
    const std::string arr = node.get<std::string>("<xmlattr>.Name", "");
    if (arr == "connectivity") connectivity = parse_numbers<long>(array_text(node, arr), arr);
    if (arr == "offsets") offsets = parse_numbers<long>(array_text(node, arr), arr);
    if (arr == "types") types = parse_numbers<long>(array_text(node, arr), arr);
    if (arr == "faces") faces = parse_numbers<long>(array_text(node, arr), arr);
    if (arr == "faceoffsets") faceoffsets = parse_numbers<long>(array_text(node, arr), arr);
  }
  if (offsets.size() != types.size() || offsets.empty()) throw ParseError("VTU Cells arrays missing or inconsistent");

  std::vector<Vec3> vertices(coords.size() / 3);
  for (std::size_t i = 0; i < vertices.size(); ++i) vertices[i] = Vec3(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]);

  std::vector<std::vector<std::vector<int>>> cells(types.size());
  long start = 0;
  long face_pos = 0;
  for (std::size_t c = 0; c < types.size(); ++c) {
    const long end = offsets[c];
    if (end < start || end > static_cast<long>(connectivity.size())) throw ParseError("bad VTU offsets");
    std::vector<int> verts(connectivity.begin() + start, connectivity.begin() + end);
    start = end;
    if (types[c] == 42) {
      if (faceoffsets.size() != types.size() || faceoffsets[c] < 0) throw ParseError("polyhedron without face stream");
      long pos = face_pos;
      const long stop = faceoffsets[c];
      if (stop > static_cast<long>(faces.size())) throw ParseError("bad VTU faceoffsets");
      const long nfaces = faces.at(pos++);
      for (long f = 0; f < nfaces; ++f) {
        const long npts = faces.at(pos++);
        std::vector<int> loop;
        for (long k = 0; k < npts; ++k) loop.push_back(static_cast<int>(faces.at(pos++)));
        cells[c].push_back(std::move(loop));
      }
      if (pos != stop) throw ParseError("VTU face stream length mismatch");
      face_pos = stop;
    } else {
      cells[c] = standard_cell_faces(static_cast<int>(types[c]), verts);
    }
  }
  return PolyMesh::from_polyhedra(std::move(vertices), cells);
}

void save_mesh_json(const PolyMesh& mesh, const std::filesystem::path& path) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices()) j["vertices"].push_back({v.x(), v.y(), v.z()});
  j["faces"] = nlohmann::json::array();
  for (const auto& f : mesh.faces()) j["faces"].push_back(f.vertices);
  j["cells"] = nlohmann::json::array();
  for (const auto& c : mesh.cells()) j["cells"].push_back(c.faces);
  std::vector<int> dir, neu;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    if (mesh.boundary_tags()[f] == FaceTag::dirichlet) dir.push_back(f);
    if (mesh.boundary_tags()[f] == FaceTag::neumann) neu.push_back(f);
  }
  if (!dir.empty() || !neu.empty()) j["boundary"] = {{"dirichlet", dir}, {"neumann", neu}};
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  out << std::setprecision(17) << j.dump() << '\n';
}

void save_mesh_off(const PolyMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << ' ' << mesh.num_edges() << '\n';
  for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces()) {
    out << f.vertices.size();
    for (int v : f.vertices) out << ' ' << v;
    out << '\n';
  }
  out << "CELLS " << mesh.num_cells() << '\n';
  for (const auto& c : mesh.cells()) {
    out << c.faces.size();
    for (int f : c.faces) out << ' ' << f;
    out << '\n';
  }
}

void write_vtu(const PolyMesh& mesh, const std::filesystem::path& path, const std::vector<VtuField>& fields) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "<?xml version=\"1.0\"?>\n"
      << "<VTKFile type=\"UnstructuredGrid\" version=\"1.0\" byte_order=\"LittleEndian\" header_type=\"UInt64\">\n"
      << "  <UnstructuredGrid>\n"
      << "    <Piece NumberOfPoints=\"" << mesh.num_vertices() << "\" NumberOfCells=\"" << mesh.num_cells() << "\">\n";

  auto write_field = [&](const VtuField& f) {
    const std::size_t count = f.cell_data ? mesh.num_cells() : mesh.num_vertices();
    if (f.values.size() != count * static_cast<std::size_t>(f.components))
      throw DimensionError("VTU field '" + f.name + "' has wrong length");
    out << "        <DataArray type=\"Float64\" Name=\"" << f.name << "\" NumberOfComponents=\"" << f.components
        << "\" format=\"ascii\">\n";
    for (double v : f.values) out << ' ' << v;
    out << "\n        </DataArray>\n";
  };

  out << "      <PointData>\n";
  for (const auto& f : fields)
    if (!f.cell_data) write_field(f);
  out << "      </PointData>\n      <CellData>\n";
  for (const auto& f : fields)
    if (f.cell_data) write_field(f);
  out << "      </CellData>\n";

  out << "      <Points>\n        <DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n";
  for (const auto& v : mesh.vertices()) out << ' ' << v.x() << ' ' << v.y() << ' ' << v.z();
  out << "\n        </DataArray>\n      </Points>\n      <Cells>\n";

  out << "        <DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n";
  for (const auto& c : mesh.cells())
    for (int v : c.vertices) out << ' ' << v;
  out << "\n        </DataArray>\n        <DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n";
  long offset = 0;
  for (const auto& c : mesh.cells()) {
    offset += static_cast<long>(c.vertices.size());
    out << ' ' << offset;
  }
  out << "\n        </DataArray>\n        <DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n";
  for (int c = 0; c < mesh.num_cells(); ++c) out << " 42";
  out << "\n        </DataArray>\n        <DataArray type=\"Int64\" Name=\"faces\" format=\"ascii\">\n";
  std::vector<long> ends;
  long pos = 0;
  for (const auto& c : mesh.cells()) {
    out << ' ' << c.faces.size();
    ++pos;
    for (std::size_t i = 0; i < c.faces.size(); ++i) {
      std::vector<int> loop = mesh.face(c.faces[i]).vertices;
      if (c.orientation[i] < 0) std::reverse(loop.begin(), loop.end());
      out << ' ' << loop.size();
      for (int v : loop) out << ' ' << v;
      pos += 1 + static_cast<long>(loop.size());
    }
    ends.push_back(pos);
  }
  out << "\n        </DataArray>\n        <DataArray type=\"Int64\" Name=\"faceoffsets\" format=\"ascii\">\n";
  for (long e : ends) out << ' ' << e;
  out << "\n        </DataArray>\n      </Cells>\n    </Piece>\n  </UnstructuredGrid>\n</VTKFile>\n";
  if (!out) throw IOError("failed writing " + path.string());
}

}  // namespace vemsad

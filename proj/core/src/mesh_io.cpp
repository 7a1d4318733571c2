#include "meshreg/mesh_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace meshreg {
namespace {

using json = nlohmann::json;

[[noreturn]] void parse_fail(const std::filesystem::path& path, size_t line,
                             const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " +
                           what);
}

void detect_non_manifold(TriMesh& mesh) {
  std::map<std::array<int, 2>, int> edge_count;
  for (const auto& tri : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  }
  mesh.non_manifold = std::any_of(edge_count.begin(), edge_count.end(),
                                  [](const auto& e) { return e.second > 2; });
}

int resolve_obj_index(long raw, size_t vertex_count,
                      const std::filesystem::path& path, size_t line) {
  // OBJ indices are 1-based; negative values count back from the end.
  long idx = raw > 0 ? raw - 1 : static_cast<long>(vertex_count) + raw;
  if (idx < 0 || idx >= static_cast<long>(vertex_count)) {
    parse_fail(path, line,
               "face index " + std::to_string(raw) + " outside vertex range [1, " +
                   std::to_string(vertex_count) + "]");
  }
  return static_cast<int>(idx);
}

TriMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  TriMesh mesh;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) {
        parse_fail(path, lineno, "malformed vertex line");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) {
        // Accept v, v/vt, v//vn, v/vt/vn; only the vertex index matters.
        size_t slash = tok.find('/');
        std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
        try {
          size_t used = 0;
          long raw = std::stol(head, &used);
          if (used != head.size()) throw std::invalid_argument(head);
          poly.push_back(resolve_obj_index(raw, mesh.vertices.size(), path, lineno));
        } catch (const std::invalid_argument&) {
          parse_fail(path, lineno, "malformed face index '" + tok + "'");
        }
      }
      if (poly.size() < 3) parse_fail(path, lineno, "face with fewer than 3 vertices");
      for (size_t k = 1; k + 1 < poly.size(); ++k) {
        mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
      }
    }
    // Other directives (vn, vt, o, g, usemtl, s, mtllib) are ignored.
  }
  return mesh;
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  for (const auto& v : mesh.vertices) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

enum class PlyScalar { f32, f64, i8, u8, i16, u16, i32, u32 };

PlyScalar parse_ply_scalar(const std::string& name,
                           const std::filesystem::path& path, size_t line) {
  if (name == "float" || name == "float32") return PlyScalar::f32;
  if (name == "double" || name == "float64") return PlyScalar::f64;
  if (name == "char" || name == "int8") return PlyScalar::i8;
  if (name == "uchar" || name == "uint8") return PlyScalar::u8;
  if (name == "short" || name == "int16") return PlyScalar::i16;
  if (name == "ushort" || name == "uint16") return PlyScalar::u16;
  if (name == "int" || name == "int32") return PlyScalar::i32;
  if (name == "uint" || name == "uint32") return PlyScalar::u32;
  parse_fail(path, line, "unknown PLY scalar type '" + name + "'");
}

double read_ply_binary_scalar(std::istream& in, PlyScalar t) {
  auto read_raw = [&](auto value) -> double {
    in.read(reinterpret_cast<char*>(&value), sizeof(value));
    return static_cast<double>(value);
  };
  switch (t) {
    case PlyScalar::f32: return read_raw(float{});
    case PlyScalar::f64: return read_raw(double{});
    case PlyScalar::i8: return read_raw(int8_t{});
    case PlyScalar::u8: return read_raw(uint8_t{});
    case PlyScalar::i16: return read_raw(int16_t{});
    case PlyScalar::u16: return read_raw(uint16_t{});
    case PlyScalar::i32: return read_raw(int32_t{});
    case PlyScalar::u32: return read_raw(uint32_t{});
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
  PlyScalar count_type = PlyScalar::u8;
  PlyScalar value_type = PlyScalar::f32;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> properties;
};

TriMesh load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  size_t lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) parse_fail(path, lineno, "unexpected end of header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++lineno;
  };

  next_line();
  if (line != "ply") parse_fail(path, lineno, "missing 'ply' magic");
  bool binary = false;
  std::vector<PlyElement> elements;
  for (;;) {
    next_line();
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
    if (tag == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        parse_fail(path, lineno, "unsupported PLY format '" + fmt + "'");
      }
    } else if (tag == "element") {
      PlyElement el;
      if (!(ls >> el.name >> el.count)) parse_fail(path, lineno, "malformed element");
      elements.push_back(el);
    } else if (tag == "property") {
      if (elements.empty()) parse_fail(path, lineno, "property before element");
      PlyProperty prop;
      std::string type_name;
      ls >> type_name;
      if (type_name == "list") {
        prop.is_list = true;
        std::string count_name, value_name;
        if (!(ls >> count_name >> value_name >> prop.name)) {
          parse_fail(path, lineno, "malformed list property");
        }
        prop.count_type = parse_ply_scalar(count_name, path, lineno);
        prop.value_type = parse_ply_scalar(value_name, path, lineno);
      } else {
        prop.value_type = parse_ply_scalar(type_name, path, lineno);
        if (!(ls >> prop.name)) parse_fail(path, lineno, "malformed property");
      }
      elements.back().properties.push_back(prop);
    } else if (tag == "end_header") {
      break;
    } else {
      parse_fail(path, lineno, "unknown header line '" + tag + "'");
    }
  }

  TriMesh mesh;
  for (const auto& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    if (is_vertex) mesh.vertices.reserve(el.count);
    for (size_t i = 0; i < el.count; ++i) {
      double x = 0, y = 0, z = 0;
      std::vector<long> face_indices;
      std::istringstream ascii_row;
      if (!binary) {
        if (!std::getline(in, line)) {
          parse_fail(path, lineno, "unexpected end of data in element '" + el.name + "'");
        }
        ++lineno;
        ascii_row.str(line);
      }
      auto read_scalar = [&](PlyScalar t) -> double {
        if (binary) return read_ply_binary_scalar(in, t);
        double v;
        if (!(ascii_row >> v)) parse_fail(path, lineno, "short data row");
        return v;
      };
      for (const auto& prop : el.properties) {
        if (prop.is_list) {
          const long n = static_cast<long>(read_scalar(prop.count_type));
          for (long k = 0; k < n; ++k) {
            const double v = read_scalar(prop.value_type);
            if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
              face_indices.push_back(static_cast<long>(v));
            }
          }
        } else {
          const double v = read_scalar(prop.value_type);
          if (is_vertex) {
            if (prop.name == "x") x = v;
            else if (prop.name == "y") y = v;
            else if (prop.name == "z") z = v;
          }
        }
      }
      if (binary && !in) {
        parse_fail(path, lineno, "unexpected end of data at offset " +
                                     std::to_string(in.tellg()));
      }
      if (is_vertex) mesh.vertices.emplace_back(x, y, z);
      if (is_face) {
        if (face_indices.size() < 3) parse_fail(path, lineno, "face with fewer than 3 vertices");
        for (auto idx : face_indices) {
          if (idx < 0 || idx >= static_cast<long>(mesh.vertices.size())) {
            parse_fail(path, lineno, "face index " + std::to_string(idx) +
                                         " outside vertex range");
          }
        }
        for (size_t k = 1; k + 1 < face_indices.size(); ++k) {
          mesh.faces.push_back({static_cast<int>(face_indices[0]),
                                static_cast<int>(face_indices[k]),
                                static_cast<int>(face_indices[k + 1])});
        }
      }
    }
  }
  return mesh;
}

void save_ply(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.faces.size() << "\n"
      << "property list uchar int vertex_indices\n"
      << "end_header\n";
  for (const auto& v : mesh.vertices) {
    double xyz[3] = {v.x(), v.y(), v.z()};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  for (const auto& f : mesh.faces) {
    const uint8_t n = 3;
    int32_t idx[3] = {f[0], f[1], f[2]};
    out.write(reinterpret_cast<const char*>(&n), 1);
    out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::filesystem::path label_sidecar_path(const std::filesystem::path& mesh_path) {
  std::filesystem::path p = mesh_path;
  p.replace_extension();
  p += ".labels.json";
  return p;
}

std::map<std::string, std::vector<int>> load_labels(
    const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw std::runtime_error("cannot open " + sidecar.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(sidecar.string() + ": " + e.what());
  }
  std::map<std::string, std::vector<int>> labels;
  for (auto it = j.begin(); it != j.end(); ++it) {
    labels[it.key()] = it.value().get<std::vector<int>>();
  }
  return labels;
}

void save_labels(const std::map<std::string, std::vector<int>>& labels,
                 const std::filesystem::path& sidecar) {
  json j = json::object();
  for (const auto& [name, chain] : labels) j[name] = chain;
  std::ofstream out(sidecar);
  if (!out) throw std::runtime_error("cannot write " + sidecar.string());
  out << j.dump(2) << '\n';
}

TriMesh load_mesh(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  TriMesh mesh;
  if (ext == ".obj" || ext == ".OBJ") {
    mesh = load_obj(path);
  } else if (ext == ".ply" || ext == ".PLY") {
    mesh = load_ply(path);
  } else {
    throw std::runtime_error("unsupported mesh format '" + ext + "' for " +
                             path.string());
  }
  const auto sidecar = label_sidecar_path(path);
  if (std::filesystem::exists(sidecar)) mesh.labels = load_labels(sidecar);
  mesh.validate();
  detect_non_manifold(mesh);
  return mesh;
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".obj" || ext == ".OBJ") {
    save_obj(mesh, path);
  } else if (ext == ".ply" || ext == ".PLY") {
    save_ply(mesh, path);
  } else {
    throw std::runtime_error("unsupported mesh format '" + ext + "' for " +
                             path.string());
  }
  if (!mesh.labels.empty()) save_labels(mesh.labels, label_sidecar_path(path));
}

}  // namespace meshreg

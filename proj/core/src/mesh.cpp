#include "meshreg/mesh.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace meshreg {

void TriMesh::validate() const {
  const int nv = vertex_count();
  for (size_t f = 0; f < faces.size(); ++f) {
    const auto& tri = faces[f];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= nv) {
        throw std::runtime_error("face " + std::to_string(f) +
                                 " references vertex " + std::to_string(tri[k]) +
                                 " outside [0, " + std::to_string(nv) + ")");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw std::runtime_error("face " + std::to_string(f) +
                               " has repeated vertex indices");
    }
  }
  for (const auto& [name, chain] : labels) {
    for (int idx : chain) {
      if (idx < 0 || idx >= nv) {
        throw std::runtime_error("label '" + name + "' references vertex " +
                                 std::to_string(idx) + " outside [0, " +
                                 std::to_string(nv) + ")");
      }
    }
  }
}

void TriMesh::apply_pose(const RigidPose& pose) {
  const Mat3 R = pose.rotation();
  for (auto& v : vertices) v = R * v + pose.translation;
}

std::pair<Vec3, Vec3> TriMesh::bounds() const {
  if (vertices.empty()) throw std::runtime_error("bounds of empty mesh");
  Vec3 lo = vertices.front(), hi = vertices.front();
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

Vec3 TriMesh::centroid() const {
  if (vertices.empty()) throw std::runtime_error("centroid of empty mesh");
  Vec3 c = Vec3::Zero();
  for (const auto& v : vertices) c += v;
  return c / static_cast<double>(vertices.size());
}

Eigen::VectorXd TriMesh::flatten() const {
  Eigen::VectorXd x(3 * vertices.size());
  for (size_t i = 0; i < vertices.size(); ++i) x.segment<3>(3 * i) = vertices[i];
  return x;
}

void TriMesh::unflatten(const Eigen::VectorXd& coords) {
  if (coords.size() % 3 != 0) {
    throw std::invalid_argument("coordinate vector length not divisible by 3");
  }
  vertices.resize(coords.size() / 3);
  for (size_t i = 0; i < vertices.size(); ++i) vertices[i] = coords.segment<3>(3 * i);
}

std::vector<Vec3> compute_face_normals(const TriMesh& mesh) {
  std::vector<Vec3> out(mesh.faces.size(), Vec3::Zero());
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    const Vec3 n = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                       .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    const double len = n.norm();
    if (len > 0.0) out[f] = n / len;
  }
  return out;
}

std::vector<Vec3> compute_vertex_normals(const TriMesh& mesh) {
  std::vector<Vec3> out(mesh.vertices.size(), Vec3::Zero());
  for (const auto& tri : mesh.faces) {
    // Cross product magnitude is twice the triangle area, so accumulating
    // the unnormalized cross products yields area weighting for free.
    const Vec3 n = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                       .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    out[tri[0]] += n;
    out[tri[1]] += n;
    out[tri[2]] += n;
  }
  for (auto& n : out) {
    const double len = n.norm();
    if (len > 0.0) n /= len;
  }
  return out;
}

std::vector<std::array<int, 2>> mesh_edges(const TriMesh& mesh) {
  std::set<std::array<int, 2>> edges;
  for (const auto& tri : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edges.insert({a, b});
    }
  }
  return {edges.begin(), edges.end()};
}

double surface_area(const TriMesh& mesh) {
  double area = 0.0;
  for (const auto& tri : mesh.faces) {
    area += 0.5 * (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                      .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]])
                      .norm();
  }
  return area;
}

}  // namespace meshreg

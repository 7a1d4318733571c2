// Indexed triangle mesh with optional named polyline labels.
#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "meshreg/geometry.hpp"

namespace meshreg {

// Triangle mesh in millimeters. Faces index into `vertices`; `labels` maps a
// channel name to an ordered chain of vertex indices tracing a contour on the
// surface (used for labeled-contour rendering and the registration
// objective). Labels are carried through deformation untouched since they
// reference vertices by index.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::map<std::string, std::vector<int>> labels;

  // Set by load_mesh when an edge is shared by more than two faces. Such
  // meshes are accepted; the flag only marks them for diagnostics.
  bool non_manifold = false;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
  bool empty() const { return vertices.empty(); }

  // Throws std::runtime_error on out-of-range or degenerate face indices and
  // on label entries referencing missing vertices.
  void validate() const;

  void apply_pose(const RigidPose& pose);

  // Axis-aligned bounds; throws on an empty mesh.
  std::pair<Vec3, Vec3> bounds() const;
  Vec3 centroid() const;

  // Stacked coordinates [x0 y0 z0 x1 y1 z1 ...] as used by the deformation
  // and shape-model code.
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& coords);
};

// Area-weighted vertex normals, normalized; zero for isolated vertices.
std::vector<Vec3> compute_vertex_normals(const TriMesh& mesh);

// Per-face unit normals (zero for degenerate faces).
std::vector<Vec3> compute_face_normals(const TriMesh& mesh);

// Unique undirected edges (i < j) from the face list.
std::vector<std::array<int, 2>> mesh_edges(const TriMesh& mesh);

double surface_area(const TriMesh& mesh);

}  // namespace meshreg

// Point-to-surface queries against a triangle mesh.
#pragma once

#include <memory>

#include "meshreg/kdtree.hpp"
#include "meshreg/mesh.hpp"

namespace meshreg {

struct SurfaceHit {
  Vec3 point = Vec3::Zero();       // closest surface point
  Vec3 normal = Vec3::Zero();      // interpolated vertex normal there, unit
  int face = -1;                   // -1 when the mesh has no faces
  Vec3 barycentric = Vec3::Zero(); // wrt the hit face corners
  double distance = 0.0;
};

// Exact closest point on a single triangle; optionally reports barycentric
// coordinates of the result.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c, Vec3* barycentric = nullptr);

// Accelerated closest-surface-point queries. Candidate triangles come from
// the one-ring neighborhood of the nearest vertex, which is exact for the
// well-shaped closed meshes used here. Falls back to nearest-vertex hits on
// meshes without faces. Immutable after construction; queries are const.
class ClosestPointQuery {
 public:
  explicit ClosestPointQuery(const TriMesh& mesh);

  SurfaceHit closest(const Vec3& p) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<Vec3> vertex_normals_;
  std::vector<std::vector<int>> incident_faces_;
  KdTree tree_;
};

// Mean over `points` of the distance to the surface of `mesh`.
double mean_surface_distance(const std::vector<Vec3>& points, const TriMesh& mesh);

}  // namespace meshreg

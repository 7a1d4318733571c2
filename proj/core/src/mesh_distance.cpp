#include "meshreg/mesh_distance.hpp"

#include <set>
#include <stdexcept>

namespace meshreg {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c, Vec3* barycentric) {
  // Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  auto emit = [&](double u, double v, double w) {
    if (barycentric) *barycentric = Vec3(u, v, w);
    return u * a + v * b + w * c;
  };

  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return emit(1, 0, 0);

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return emit(0, 1, 0);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return emit(1 - v, v, 0);
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return emit(0, 0, 1);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return emit(1 - w, 0, w);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return emit(0, 1 - w, w);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return emit(1 - v - w, v, w);
}

ClosestPointQuery::ClosestPointQuery(const TriMesh& mesh)
    : vertices_(mesh.vertices),
      faces_(mesh.faces),
      vertex_normals_(compute_vertex_normals(mesh)),
      incident_faces_(mesh.vertices.size()),
      tree_(mesh.vertices) {
  for (size_t f = 0; f < faces_.size(); ++f) {
    for (int k = 0; k < 3; ++k) incident_faces_[faces_[f][k]].push_back(static_cast<int>(f));
  }
}

SurfaceHit ClosestPointQuery::closest(const Vec3& p) const {
  const auto seed = tree_.nearest(p);
  SurfaceHit best;
  best.point = vertices_[seed.index];
  best.normal = vertex_normals_[seed.index];
  best.distance = std::sqrt(seed.sq_dist);

  if (faces_.empty()) return best;

  // One-ring expansion around the seed vertex.
  std::set<int> candidates;
  for (int f : incident_faces_[seed.index]) {
    candidates.insert(f);
    for (int v : faces_[f]) {
      for (int g : incident_faces_[v]) candidates.insert(g);
    }
  }

  double best_sq = seed.sq_dist;
  for (int f : candidates) {
    const auto& tri = faces_[f];
    Vec3 bary;
    const Vec3 q = closest_point_on_triangle(p, vertices_[tri[0]], vertices_[tri[1]],
                                             vertices_[tri[2]], &bary);
    const double sq = (q - p).squaredNorm();
    if (sq < best_sq || (best.face < 0 && sq <= best_sq)) {
      best_sq = sq;
      best.point = q;
      best.face = f;
      best.barycentric = bary;
      Vec3 n = bary.x() * vertex_normals_[tri[0]] + bary.y() * vertex_normals_[tri[1]] +
               bary.z() * vertex_normals_[tri[2]];
      const double len = n.norm();
      best.normal = len > 0.0 ? Vec3(n / len) : best.normal;
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

double mean_surface_distance(const std::vector<Vec3>& points, const TriMesh& mesh) {
  if (points.empty()) throw std::invalid_argument("no query points");
  const ClosestPointQuery query(mesh);
  double sum = 0.0;
  for (const auto& p : points) sum += query.closest(p).distance;
  return sum / static_cast<double>(points.size());
}

}  // namespace meshreg

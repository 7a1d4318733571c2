#include "meshreg/primitives.hpp"

#include <cmath>
#include <cstdint>
#include <map>

namespace meshreg {

TriMesh make_icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh mesh;
  mesh.vertices = {
      {-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1},
  };
  mesh.faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      mesh.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
      const int idx = mesh.vertex_count() - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> refined;
    refined.reserve(4 * mesh.faces.size());
    for (const auto& f : mesh.faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      refined.push_back({f[0], ab, ca});
      refined.push_back({f[1], bc, ab});
      refined.push_back({f[2], ca, bc});
      refined.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(refined);
  }

  for (auto& v : mesh.vertices) v = radius * v.normalized();
  return mesh;
}

TriMesh make_cube(double edge) {
  const double h = edge / 2.0;
  TriMesh mesh;
  mesh.vertices = {
      {-h, -h, -h}, {h, -h, -h}, {h, h, -h}, {-h, h, -h},
      {-h, -h, h},  {h, -h, h},  {h, h, h},  {-h, h, h},
  };
  mesh.faces = {
      {0, 2, 1}, {0, 3, 2},  // z = -h
      {4, 5, 6}, {4, 6, 7},  // z = +h
      {0, 1, 5}, {0, 5, 4},  // y = -h
      {2, 3, 7}, {2, 7, 6},  // y = +h
      {1, 2, 6}, {1, 6, 5},  // x = +h
      {3, 0, 4}, {3, 4, 7},  // x = -h
  };
  return mesh;
}

TriMesh make_quad() {
  TriMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  mesh.faces = {{0, 1, 2}, {0, 2, 3}};
  return mesh;
}

}  // namespace meshreg

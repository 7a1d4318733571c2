#include "meshreg/render.hpp"

#include <algorithm>
#include <cmath>

namespace meshreg {
namespace {

struct ScreenVertex {
  double x, y;   // pixel coordinates
  double invz;   // 1/z, affine across the screen-space triangle
};

double edge_fn(double px, double py, double qx, double qy, double rx, double ry) {
  return (qx - px) * (ry - py) - (qy - py) * (rx - px);
}

// Pixels exactly on an edge belong to the triangle only for top and left
// edges, so adjacent triangles never both own a shared boundary pixel.
bool edge_accepts(double e, double dx, double dy) {
  if (e > 0.0) return true;
  if (e < 0.0) return false;
  return dy < 0.0 || (dy == 0.0 && dx > 0.0);
}

void raster_triangle(const ScreenVertex& a, ScreenVertex b, ScreenVertex c,
                     MaskImage& mask, DepthImage& depth) {
  double area2 = edge_fn(a.x, a.y, b.x, b.y, c.x, c.y);
  if (area2 == 0.0) return;
  if (area2 < 0.0) {
    std::swap(b, c);  // both windings render; normalize orientation
    area2 = -area2;
  }

  const int w = mask.width, h = mask.height;
  const double minx = std::min({a.x, b.x, c.x}), maxx = std::max({a.x, b.x, c.x});
  const double miny = std::min({a.y, b.y, c.y}), maxy = std::max({a.y, b.y, c.y});
  const int x0 = std::max(0, static_cast<int>(std::floor(minx - 0.5)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(maxx - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(miny - 0.5)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(maxy - 0.5)));

  for (int iy = y0; iy <= y1; ++iy) {
    const double py = iy + 0.5;
    for (int ix = x0; ix <= x1; ++ix) {
      const double px = ix + 0.5;
      const double e0 = edge_fn(b.x, b.y, c.x, c.y, px, py);
      const double e1 = edge_fn(c.x, c.y, a.x, a.y, px, py);
      const double e2 = edge_fn(a.x, a.y, b.x, b.y, px, py);
      if (!edge_accepts(e0, c.x - b.x, c.y - b.y) ||
          !edge_accepts(e1, a.x - c.x, a.y - c.y) ||
          !edge_accepts(e2, b.x - a.x, b.y - a.y)) {
        continue;
      }
      const double invz = (e0 * a.invz + e1 * b.invz + e2 * c.invz) / area2;
      if (invz <= 0.0) continue;
      const auto z = static_cast<float>(1.0 / invz);
      float& zbuf = depth.at(ix, iy);
      if (zbuf == 0.0f || z < zbuf) {
        zbuf = z;
        mask.at(ix, iy) = 255;
      }
    }
  }
}

// Sutherland-Hodgman clip of a camera-space triangle against z >= near.
// Yields 0, 3, or 4 vertices.
std::vector<Vec3> clip_near(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 in[3] = {a, b, c};
  std::vector<Vec3> out;
  out.reserve(4);
  for (int i = 0; i < 3; ++i) {
    const Vec3& cur = in[i];
    const Vec3& nxt = in[(i + 1) % 3];
    const bool cur_in = cur.z() >= kNearPlaneMm;
    const bool nxt_in = nxt.z() >= kNearPlaneMm;
    if (cur_in) out.push_back(cur);
    if (cur_in != nxt_in) {
      const double t = (kNearPlaneMm - cur.z()) / (nxt.z() - cur.z());
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

void bresenham(int x0, int y0, int x1, int y1, MaskImage& img) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    if (img.in_bounds(x0, y0)) img.at(x0, y0) = 255;
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

bool depth_visible(const DepthImage& depth, int ix, int iy, double z) {
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int x = ix + dx, y = iy + dy;
      if (!depth.in_bounds(x, y)) continue;
      const float d = depth.at(x, y);
      if (d > 0.0f && std::abs(d - z) <= kVisibilityTolMm) return true;
    }
  }
  return false;
}

}  // namespace

void render_depth_mask(const TriMesh& mesh, const RigidPose& pose,
                       const CameraIntrinsics& cam, MaskImage& mask,
                       DepthImage& depth) {
  cam.validate();
  mask = MaskImage(cam.width, cam.height, 0);
  depth = DepthImage(cam.width, cam.height, 0.0f);

  const Mat3 R = pose.rotation();
  std::vector<Vec3> cam_pts(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    cam_pts[i] = R * mesh.vertices[i] + pose.translation;
  }

  auto to_screen = [&](const Vec3& p) {
    const Vec2 uv = cam.project(p);
    return ScreenVertex{uv.x(), uv.y(), 1.0 / p.z()};
  };

  for (const auto& tri : mesh.faces) {
    const auto poly =
        clip_near(cam_pts[tri[0]], cam_pts[tri[1]], cam_pts[tri[2]]);
    for (size_t k = 1; k + 1 < poly.size(); ++k) {
      raster_triangle(to_screen(poly[0]), to_screen(poly[k]),
                      to_screen(poly[k + 1]), mask, depth);
    }
  }
}

std::vector<std::array<int, 2>> extract_silhouette(const MaskImage& mask) {
  std::vector<std::array<int, 2>> out;
  auto unset = [&](int x, int y) {
    return !mask.in_bounds(x, y) || mask.at(x, y) == 0;
  };
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y) == 0) continue;
      if (unset(x - 1, y) || unset(x + 1, y) || unset(x, y - 1) || unset(x, y + 1)) {
        out.push_back({x, y});
      }
    }
  }
  return out;
}

MaskImage paint_points(const std::vector<std::array<int, 2>>& points, int width,
                       int height) {
  MaskImage img(width, height, 0);
  for (const auto& p : points) {
    if (img.in_bounds(p[0], p[1])) img.at(p[0], p[1]) = 255;
  }
  return img;
}

std::map<std::string, MaskImage> render_labeled_contours(
    const TriMesh& mesh, const RigidPose& pose, const CameraIntrinsics& cam,
    const DepthImage& depth) {
  cam.validate();
  const Mat3 R = pose.rotation();
  std::map<std::string, MaskImage> channels;
  for (const auto& [name, chain] : mesh.labels) {
    MaskImage channel(cam.width, cam.height, 0);
    bool prev_visible = false;
    int prev_x = 0, prev_y = 0;
    for (int idx : chain) {
      const Vec3 p = R * mesh.vertices[idx] + pose.translation;
      bool visible = false;
      int ix = 0, iy = 0;
      if (p.z() >= kNearPlaneMm) {
        const Vec2 uv = cam.project(p);
        ix = static_cast<int>(std::floor(uv.x()));
        iy = static_cast<int>(std::floor(uv.y()));
        visible = depth_visible(depth, ix, iy, p.z());
      }
      if (visible) {
        if (channel.in_bounds(ix, iy)) channel.at(ix, iy) = 255;
        if (prev_visible) bresenham(prev_x, prev_y, ix, iy, channel);
        prev_x = ix;
        prev_y = iy;
      }
      prev_visible = visible;
    }
    channels.emplace(name, std::move(channel));
  }
  return channels;
}

LabelImageSet render_full(const TriMesh& mesh, const RigidPose& pose,
                          const CameraIntrinsics& cam) {
  LabelImageSet out;
  render_depth_mask(mesh, pose, cam, out.full_mask, out.depth);
  out.channels = render_labeled_contours(mesh, pose, cam, out.depth);
  out.channels["sil"] =
      paint_points(extract_silhouette(out.full_mask), cam.width, cam.height);
  return out;
}

}  // namespace meshreg

// Ideal pinhole intrinsics.
#pragma once

#include <stdexcept>

#include "meshreg/geometry.hpp"

namespace meshreg {

// Image origin top-left, x right, y down, pixel centers at integer + 0.5.
// Projection of a camera-space point (z > 0, mm):
//   u = fx * x / z + cx,  v = fy * y / z + cy
struct CameraIntrinsics {
  double fx = 0, fy = 0;  // focal lengths (px)
  double cx = 0, cy = 0;  // principal point (px)
  int width = 0, height = 0;

  void validate() const {
    if (fx <= 0 || fy <= 0) throw std::invalid_argument("non-positive focal length");
    if (width <= 0 || height <= 0) throw std::invalid_argument("empty image size");
    if (cx < 0 || cx >= width || cy < 0 || cy >= height) {
      throw std::invalid_argument("principal point outside image");
    }
  }

  Vec2 project(const Vec3& p_cam) const {
    return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy};
  }

  double diagonal_px() const {
    return std::sqrt(static_cast<double>(width) * width +
                     static_cast<double>(height) * height);
  }
};

}  // namespace meshreg

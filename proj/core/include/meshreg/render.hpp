// Software pinhole renderer: z-buffered masks and depth, silhouette
// extraction, and visibility-tested projection of labeled polylines.
#pragma once

#include <map>
#include <string>

#include "meshreg/camera.hpp"
#include "meshreg/image.hpp"
#include "meshreg/mesh.hpp"

namespace meshreg {

// Geometry closer than this is clipped (mm).
inline constexpr double kNearPlaneMm = 0.1;

// A labeled polyline vertex counts as visible when its depth is within this
// tolerance of the z-buffer (mm).
inline constexpr double kVisibilityTolMm = 1.0;

struct LabelImageSet {
  std::map<std::string, MaskImage> channels;  // label channels plus "sil"
  MaskImage full_mask;
  DepthImage depth;  // mm, 0 = invalid
};

// Rasterizes the posed mesh with a minimum z-buffer. Mask is 255 exactly
// where depth > 0. A mesh entirely behind the near plane yields empty
// outputs. Deterministic: top-left fill rule, perspective-correct depth.
void render_depth_mask(const TriMesh& mesh, const RigidPose& pose,
                       const CameraIntrinsics& cam, MaskImage& mask,
                       DepthImage& depth);

// Mask pixels with at least one unset 4-neighbor; pixels on the image
// border count as boundary.
std::vector<std::array<int, 2>> extract_silhouette(const MaskImage& mask);

MaskImage paint_points(const std::vector<std::array<int, 2>>& points, int width,
                       int height);

// Projects each labeled polyline of the mesh; a vertex is drawn only when
// its depth matches the z-buffer within kVisibilityTolMm (checking the 3x3
// pixel neighborhood, since the projection rarely lands on the exact pixel
// the rasterizer filled). Consecutive visible vertices are joined by 1-px
// Bresenham segments. Labels absent from the mesh simply produce no channel.
std::map<std::string, MaskImage> render_labeled_contours(
    const TriMesh& mesh, const RigidPose& pose, const CameraIntrinsics& cam,
    const DepthImage& depth);

// Full per-frame render: depth + mask, labeled channels, and the "sil"
// silhouette channel.
LabelImageSet render_full(const TriMesh& mesh, const RigidPose& pose,
                          const CameraIntrinsics& cam);

}  // namespace meshreg

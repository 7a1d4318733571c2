#include "meshreg/icp.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "meshreg/kdtree.hpp"

namespace meshreg {
namespace {

bool has_three_noncollinear(const std::vector<Vec3>& pts) {
  if (pts.size() < 3) return false;
  for (size_t i = 1; i < pts.size(); ++i) {
    const Vec3 d1 = pts[i] - pts[0];
    if (d1.squaredNorm() < 1e-20) continue;
    for (size_t j = i + 1; j < pts.size(); ++j) {
      const Vec3 d2 = pts[j] - pts[0];
      if (d1.cross(d2).squaredNorm() > 1e-18 * d1.squaredNorm() * d2.squaredNorm()) {
        return true;
      }
    }
    return false;  // all remaining points lie on the ray through pts[i]
  }
  return false;
}

}  // namespace

RigidPose rigid_icp(const TriMesh& source, const TriMesh& target, int max_iter,
                    double tol) {
  if (source.empty() || target.empty()) {
    throw std::invalid_argument("rigid_icp requires non-empty meshes");
  }
  if (!has_three_noncollinear(source.vertices)) {
    throw std::runtime_error("rank-deficient alignment");
  }

  const KdTree tree(target.vertices);
  std::vector<Vec3> moved = source.vertices;
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  double prev_rms = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < max_iter; ++iter) {
    const size_t n = moved.size();
    std::vector<int> match(n);
    std::vector<double> dist(n);
    for (size_t i = 0; i < n; ++i) {
      const auto hit = tree.nearest(moved[i]);
      match[i] = hit.index;
      dist[i] = std::sqrt(hit.sq_dist);
    }

    std::vector<double> sorted = dist;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double median = sorted[n / 2];
    const double cutoff = 3.0 * median;

    std::vector<int> kept;
    kept.reserve(n);
    double sq_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      // Keep everything when the median collapses to zero (exact overlap).
      if (median == 0.0 || dist[i] <= cutoff) {
        kept.push_back(static_cast<int>(i));
        sq_sum += dist[i] * dist[i];
      }
    }
    if (kept.size() < 3) throw std::runtime_error("rank-deficient alignment");

    Eigen::Matrix3Xd src(3, kept.size()), dst(3, kept.size());
    for (size_t k = 0; k < kept.size(); ++k) {
      src.col(k) = moved[kept[k]];
      dst.col(k) = target.vertices[match[kept[k]]];
    }
    const Mat4 delta = Eigen::umeyama(src, dst, /*with_scaling=*/false);
    const Mat3 dR = delta.topLeftCorner<3, 3>();
    const Vec3 dt = delta.topRightCorner<3, 1>();

    R = dR * R;
    t = dR * t + dt;
    for (size_t i = 0; i < moved.size(); ++i) {
      moved[i] = dR * moved[i] + dt;
    }

    const double rms = std::sqrt(sq_sum / static_cast<double>(kept.size()));
    if (std::abs(prev_rms - rms) < tol) break;
    prev_rms = rms;
  }

  return RigidPose::from_matrix(R, t);
}

}  // namespace meshreg

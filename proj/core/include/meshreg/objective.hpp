// Registration objectives and evaluation metrics: weighted symmetric
// Hausdorff over labeled contour channels, surface MSE between pose chains,
// and tumor target registration error via barycentric surface attachment.
#pragma once

#include "meshreg/render.hpp"
#include "meshreg/shape_model.hpp"

namespace meshreg {

// Symmetric Hausdorff distance max(h(A,B), h(B,A)) with
// h(A,B) = max_a min_b |a-b|. Exact: squared distances throughout, one
// final sqrt. Throws "undefined Hausdorff" on an empty set.
double hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

// Pixel coordinates (x, y) of set mask pixels, row-major order.
std::vector<Vec2> mask_points(const MaskImage& mask);

struct LabelWeights {
  std::map<std::string, double> w;
};

// w_n = |L_n| / N over the set pixels of all channels; when every channel
// is empty each weight falls back to the literal 1/4 (the channel inventory
// is the four contour classes).
LabelWeights label_weights(const LabelImageSet& observed);

// CMA-ES fitness: renders the shaped, posed model and accumulates
// w_n-weighted Hausdorff against the observed channels. A channel whose
// rendered contour is empty while the observation is not contributes the
// image diagonal (px) instead, so out-of-frustum candidates rank strictly
// worse than any in-frame alignment. Pure and reentrant; observed point
// sets and weights are extracted once at construction.
class RegistrationObjective {
 public:
  RegistrationObjective(const ShapeModel& model, const LabelImageSet& observed,
                        const CameraIntrinsics& cam);

  // theta = [tx ty tz (mm), rx ry rz (deg)] with shape coefficients
  // appended unless the vector is rigid-only (size 6).
  double operator()(const Eigen::VectorXd& theta) const;

  double cost(const RigidPose& pose, const Eigen::VectorXd& alpha) const;

  // Per-channel Hausdorff (or penalty) terms, unweighted.
  std::map<std::string, double> channel_distances(const RigidPose& pose,
                                                  const Eigen::VectorXd& alpha) const;

  const LabelWeights& weights() const { return weights_; }

  RigidPose unpack_pose(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd unpack_shape(const Eigen::VectorXd& theta) const;

 private:
  const ShapeModel& model_;
  CameraIntrinsics cam_;
  LabelWeights weights_;
  std::map<std::string, std::vector<Vec2>> observed_points_;
};

// Convenience wrapper over a one-shot RegistrationObjective evaluation.
double registration_cost(const ShapeModel& model, const RigidPose& pose,
                         const Eigen::VectorXd& alpha, const LabelImageSet& observed,
                         const CameraIntrinsics& cam);

// (1/N) sum_i |T_A T_pred p_i - T_B p_i|^2 over mesh vertices (mm^2).
double surface_mse(const TriMesh& mesh, const RigidPose& T_A, const RigidPose& T_B,
                   const RigidPose& T_pred);

// A point bound to the canonical surface: barycentric coordinates on the
// nearest triangle plus a signed offset along that triangle's normal. The
// shape model moves only surface vertices, so interior targets ride the
// surface through this attachment.
struct TumorAttachment {
  int face = -1;
  Vec3 barycentric = Vec3::Zero();
  double normal_offset = 0.0;  // mm
};

TumorAttachment attach_point(const TriMesh& canonical, const Vec3& point);
Vec3 attached_position(const TriMesh& mesh, const TumorAttachment& attachment);

// Distance between the attached target mapped under the ground-truth
// (pose, shape) and under the estimate (mm).
double target_registration_error(const Vec3& target_canonical,
                                 const RigidPose& pose_gt,
                                 const Eigen::VectorXd& shape_gt,
                                 const RigidPose& pose_est,
                                 const Eigen::VectorXd& shape_est,
                                 const ShapeModel& model);

}  // namespace meshreg

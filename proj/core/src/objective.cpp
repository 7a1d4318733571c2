#include "meshreg/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "meshreg/mesh_distance.hpp"

namespace meshreg {
namespace {

// Directed part in squared space with the classic early break: once a
// point's running minimum falls at or below the current max, that point
// cannot raise the answer.
double directed_sq(const std::vector<Vec2>& from, const std::vector<Vec2>& to) {
  double max_min_sq = 0.0;
  for (const auto& p : from) {
    double min_sq = std::numeric_limits<double>::infinity();
    for (const auto& q : to) {
      const double d = (p - q).squaredNorm();
      if (d < min_sq) {
        min_sq = d;
        if (min_sq <= max_min_sq) break;
      }
    }
    if (min_sq > max_min_sq) max_min_sq = min_sq;
  }
  return max_min_sq;
}

}  // namespace

double hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("undefined Hausdorff");
  return std::sqrt(std::max(directed_sq(a, b), directed_sq(b, a)));
}

std::vector<Vec2> mask_points(const MaskImage& mask) {
  std::vector<Vec2> pts;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y) != 0) pts.emplace_back(x, y);
    }
  }
  return pts;
}

LabelWeights label_weights(const LabelImageSet& observed) {
  LabelWeights out;
  long total = 0;
  for (const auto& [name, mask] : observed.channels) {
    const int count = count_nonzero(mask);
    out.w[name] = count;
    total += count;
  }
  for (auto& [name, w] : out.w) {
    w = total > 0 ? w / static_cast<double>(total) : 0.25;
  }
  return out;
}

RegistrationObjective::RegistrationObjective(const ShapeModel& model,
                                             const LabelImageSet& observed,
                                             const CameraIntrinsics& cam)
    : model_(model), cam_(cam), weights_(label_weights(observed)) {
  cam_.validate();
  for (const auto& [name, mask] : observed.channels) {
    observed_points_[name] = mask_points(mask);
  }
}

RigidPose RegistrationObjective::unpack_pose(const Eigen::VectorXd& theta) const {
  if (theta.size() != 6 && theta.size() != 6 + model_.mode_count()) {
    throw std::invalid_argument("parameter vector has wrong length");
  }
  return RigidPose{theta.segment<3>(3), theta.segment<3>(0)};
}

Eigen::VectorXd RegistrationObjective::unpack_shape(
    const Eigen::VectorXd& theta) const {
  if (theta.size() == 6) return Eigen::VectorXd::Zero(model_.mode_count());
  return theta.tail(model_.mode_count());
}

std::map<std::string, double> RegistrationObjective::channel_distances(
    const RigidPose& pose, const Eigen::VectorXd& alpha) const {
  const TriMesh shaped = eval_shape(model_, alpha);
  const LabelImageSet rendered = render_full(shaped, pose, cam_);

  std::map<std::string, double> dists;
  for (const auto& [name, obs] : observed_points_) {
    if (obs.empty()) continue;
    const auto it = rendered.channels.find(name);
    if (it == rendered.channels.end()) {
      dists[name] = cam_.diagonal_px();
      continue;
    }
    const auto ren = mask_points(it->second);
    dists[name] = ren.empty() ? cam_.diagonal_px() : hausdorff(ren, obs);
  }
  return dists;
}

double RegistrationObjective::cost(const RigidPose& pose,
                                   const Eigen::VectorXd& alpha) const {
  double total = 0.0;
  for (const auto& [name, d] : channel_distances(pose, alpha)) {
    total += weights_.w.at(name) * d;
  }
  return total;
}

double RegistrationObjective::operator()(const Eigen::VectorXd& theta) const {
  return cost(unpack_pose(theta), unpack_shape(theta));
}

double registration_cost(const ShapeModel& model, const RigidPose& pose,
                         const Eigen::VectorXd& alpha, const LabelImageSet& observed,
                         const CameraIntrinsics& cam) {
  return RegistrationObjective(model, observed, cam).cost(pose, alpha);
}

double surface_mse(const TriMesh& mesh, const RigidPose& T_A, const RigidPose& T_B,
                   const RigidPose& T_pred) {
  if (mesh.empty()) throw std::invalid_argument("surface_mse over empty mesh");
  const Mat3 Ra = T_A.rotation(), Rb = T_B.rotation(), Rp = T_pred.rotation();
  const Mat3 R_chain = Ra * Rp;
  const Vec3 t_chain = Ra * T_pred.translation + T_A.translation;
  double sum = 0.0;
  for (const auto& p : mesh.vertices) {
    sum += ((R_chain * p + t_chain) - (Rb * p + T_B.translation)).squaredNorm();
  }
  return sum / static_cast<double>(mesh.vertices.size());
}

TumorAttachment attach_point(const TriMesh& canonical, const Vec3& point) {
  if (canonical.faces.empty()) {
    throw std::invalid_argument("attachment requires a mesh with faces");
  }
  const ClosestPointQuery query(canonical);
  const SurfaceHit hit = query.closest(point);
  const auto& tri = canonical.faces[hit.face];
  const Vec3 fn = (canonical.vertices[tri[1]] - canonical.vertices[tri[0]])
                      .cross(canonical.vertices[tri[2]] - canonical.vertices[tri[0]])
                      .normalized();
  TumorAttachment att;
  att.face = hit.face;
  att.barycentric = hit.barycentric;
  att.normal_offset = (point - hit.point).dot(fn);
  return att;
}

Vec3 attached_position(const TriMesh& mesh, const TumorAttachment& attachment) {
  const auto& tri = mesh.faces.at(attachment.face);
  const Vec3& a = mesh.vertices[tri[0]];
  const Vec3& b = mesh.vertices[tri[1]];
  const Vec3& c = mesh.vertices[tri[2]];
  const Vec3 fn = (b - a).cross(c - a).normalized();
  const Vec3 on_surface = attachment.barycentric.x() * a +
                          attachment.barycentric.y() * b +
                          attachment.barycentric.z() * c;
  return on_surface + attachment.normal_offset * fn;
}

double target_registration_error(const Vec3& target_canonical,
                                 const RigidPose& pose_gt,
                                 const Eigen::VectorXd& shape_gt,
                                 const RigidPose& pose_est,
                                 const Eigen::VectorXd& shape_est,
                                 const ShapeModel& model) {
  const TumorAttachment att = attach_point(model.canonical, target_canonical);
  const TriMesh mesh_gt = eval_shape(model, shape_gt);
  const TriMesh mesh_est = eval_shape(model, shape_est);
  const Vec3 world_gt = pose_gt.apply(attached_position(mesh_gt, att));
  const Vec3 world_est = pose_est.apply(attached_position(mesh_est, att));
  return (world_gt - world_est).norm();
}

}  // namespace meshreg

// Shared fixtures: a labeled blob mesh, planted shape models and corpora,
// and random pose helpers.
#pragma once

#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "meshreg/mesh.hpp"
#include "meshreg/primitives.hpp"
#include "meshreg/rng.hpp"
#include "meshreg/shape_model.hpp"

namespace meshreg::testing {

// Vertex chain near the plane through the origin with normal n, restricted
// to the half-space v.h > 0, ordered by angle. Serves as a synthetic
// contour label.
inline std::vector<int> meridian_chain(const TriMesh& mesh, const Vec3& n,
                                       const Vec3& h) {
  const Vec3 a1 = h.normalized();
  const Vec3 a2 = n.cross(h).normalized();
  std::vector<std::pair<double, int>> picked;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Vec3& v = mesh.vertices[i];
    if (std::abs(v.dot(n.normalized())) < 0.12 * v.norm() && v.dot(a1) > 0) {
      picked.push_back({std::atan2(v.dot(a2), v.dot(a1)), i});
    }
  }
  std::sort(picked.begin(), picked.end());
  std::vector<int> chain;
  for (const auto& [angle, i] : picked) chain.push_back(i);
  return chain;
}

// Smooth star-shaped solid, radius ~30 mm, with the four contour labels.
inline TriMesh make_blob(int subdivisions = 3) {
  TriMesh mesh = make_icosphere(30.0, subdivisions);
  for (auto& v : mesh.vertices) {
    const Vec3 d = v.normalized();
    const double bump = 1.0 + 0.18 * std::sin(2.1 * d.x() + 0.7) * std::cos(1.7 * d.y()) +
                        0.12 * std::sin(1.3 * d.z() - 0.4);
    v *= bump;
  }
  mesh.labels["ridge_L"] = meridian_chain(mesh, Vec3(0, 0, 1), Vec3(-1, 0.2, 0));
  mesh.labels["ridge_R"] = meridian_chain(mesh, Vec3(0, 0, 1), Vec3(1, 0.2, 0));
  mesh.labels["lig"] = meridian_chain(mesh, Vec3(1, 0, 0), Vec3(0, 1, 0));
  return mesh;
}

// K smooth, orthonormal displacement fields over the mesh (flattened 3V
// columns): radial inflation, x-stretch, and a bending wave, then
// Gram-Schmidt.
inline Eigen::MatrixXd planted_modes(const TriMesh& base, int K = 3) {
  const int V = base.vertex_count();
  Eigen::MatrixXd M(3 * V, K);
  for (int i = 0; i < V; ++i) {
    const Vec3& v = base.vertices[i];
    const Vec3 d = v.normalized();
    if (K > 0) M.block<3, 1>(3 * i, 0) = d;
    if (K > 1) M.block<3, 1>(3 * i, 1) = Vec3(v.x() / 30.0, 0, 0);
    if (K > 2) M.block<3, 1>(3 * i, 2) = Vec3(0, std::sin(v.x() / 12.0), 0);
  }
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < k; ++j) M.col(k) -= M.col(j).dot(M.col(k)) * M.col(j);
    M.col(k).normalize();
  }
  return M;
}

inline ShapeModel planted_model(const TriMesh& base,
                                const Eigen::VectorXd& sigma) {
  ShapeModel model;
  model.canonical = base;
  model.x0 = base.flatten();
  model.U = planted_modes(base, static_cast<int>(sigma.size()));
  model.sigma = sigma;
  return model;
}

inline ShapeModel planted_model(const TriMesh& base) {
  Eigen::VectorXd sigma(3);
  sigma << 3.0, 2.0, 1.0;
  return planted_model(base, sigma);
}

// Corpus meshes x0 + U diag(sigma) c with c ~ N(0, 1): a population whose
// principal subspace is span(U).
inline std::vector<TriMesh> planted_corpus(const ShapeModel& model, int count,
                                           uint64_t seed) {
  Rng rng(seed);
  std::vector<TriMesh> corpus;
  for (int j = 0; j < count; ++j) {
    Eigen::VectorXd c(model.mode_count());
    for (int k = 0; k < c.size(); ++k) c[k] = rng.gaussian();
    TriMesh mesh = model.canonical;
    mesh.unflatten(model.x0 + model.U * (model.sigma.asDiagonal() * c));
    corpus.push_back(std::move(mesh));
  }
  return corpus;
}

inline RigidPose random_pose(Rng& rng, double t_range_mm, double r_range_deg) {
  RigidPose pose;
  for (int c = 0; c < 3; ++c) pose.translation[c] = rng.uniform(-t_range_mm, t_range_mm);
  for (int c = 0; c < 3; ++c) pose.rotation_deg[c] = rng.uniform(-r_range_deg, r_range_deg);
  return pose;
}

// Largest principal angle (degrees) between the column spaces of A and B.
inline double max_principal_angle_deg(const Eigen::MatrixXd& A,
                                      const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd Qa = Eigen::HouseholderQR<Eigen::MatrixXd>(A)
                                 .householderQ() *
                             Eigen::MatrixXd::Identity(A.rows(), A.cols());
  const Eigen::MatrixXd Qb = Eigen::HouseholderQR<Eigen::MatrixXd>(B)
                                 .householderQ() *
                             Eigen::MatrixXd::Identity(B.rows(), B.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Qa.transpose() * Qb);
  const double c = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

// Fresh scratch directory under the system temp root.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("meshreg_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace meshreg::testing

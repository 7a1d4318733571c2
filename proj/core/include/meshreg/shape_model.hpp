// PCA displacement model over a registered mesh corpus.
#pragma once

#include <filesystem>

#include "meshreg/mesh.hpp"

namespace meshreg {

// Linear shape space x(a) = x0 + U diag(sigma) a with coefficients clamped
// to [-1, 1] per component (one sigma each way). x0 is the corpus-mean shape
// (canonical plus mean displacement); the raw canonical mesh is kept for
// topology and labels.
struct ShapeModel {
  TriMesh canonical;       // topology, labels, raw canonical vertices
  Eigen::VectorXd x0;      // 3V, corpus-mean shape (mm)
  Eigen::MatrixXd U;       // 3V x K, orthonormal columns
  Eigen::VectorXd sigma;   // K, non-increasing, population (1/N) convention

  int mode_count() const { return static_cast<int>(sigma.size()); }
  int vertex_count() const { return static_cast<int>(x0.size()) / 3; }
};

// PCA over per-vertex displacements of the corpus relative to `canonical`.
// Displacements are mean-centered before the SVD and the mean is folded into
// x0, so eval_shape(model, 0) returns the corpus-mean shape. Throws when a
// corpus mesh disagrees in topology (naming it) or when the corpus is
// smaller than K.
ShapeModel build_model(const TriMesh& canonical, const std::vector<TriMesh>& corpus,
                       int K);

// Clamps `coeffs` to [-1, 1] component-wise and evaluates. Output carries
// the canonical topology and labels.
TriMesh eval_shape(const ShapeModel& model, const Eigen::VectorXd& coeffs);

// Least-squares inverse of eval_shape: a = diag(sigma)^-1 U^T (x - x0),
// with zero-sigma components reported as 0. No clamping.
Eigen::VectorXd project_shape(const ShapeModel& model, const TriMesh& mesh);

// Binary container (magic/version header, little-endian f64 arrays) plus the
// canonical topology and labels. Round-trips exactly.
void save_model(const ShapeModel& model, const std::filesystem::path& path);
ShapeModel load_model(const std::filesystem::path& path);

}  // namespace meshreg

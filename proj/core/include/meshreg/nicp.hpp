// Non-rigid ICP: per-vertex affine deformation solved from a
// stiffness-regularized sparse least-squares system with normal-gated
// correspondences, over a coarse-to-fine stiffness schedule.
#pragma once

#include <Eigen/Sparse>

#include "meshreg/mesh.hpp"
#include "meshreg/mesh_distance.hpp"

namespace meshreg {

struct NicpConfig {
  // Rigidity weights, one outer stage per entry, strictly decreasing.
  std::vector<double> stiffness_schedule = {20, 10, 5, 2, 1, 0.5, 0.2};
  // Correspondence is kept when deformed-source and target normals have
  // dot product above this cutoff.
  double normal_threshold = 0.7;
  // Weight gamma assigned to kept correspondences.
  double match_weight = 1.0;
  // Tikhonov damping of the normal equations.
  double tikhonov = 1e-6;
  int inner_iters_per_stage = 10;
  // Mean-vertex-motion stop per stage (mm); <= 0 selects
  // 1e-4 x source bounding-box diagonal.
  double inner_tol = 0.0;

  // Throws std::invalid_argument when the schedule is not strictly
  // decreasing/positive or the scalar parameters leave their ranges.
  void validate() const;
};

// Unknowns and fixed system structure. x holds one 4x3 affine block per
// vertex ([A_i; t_i^T], identity at construction); D maps x to deformed
// positions via the original source vertices, row i = [v_i^T 1] at block i.
struct NicpState {
  Eigen::MatrixXd x;                      // 4V x 3
  std::vector<std::array<int, 2>> edges;  // unique undirected, i < j
  Eigen::SparseMatrix<double> D;          // V x 4V
  std::vector<Vec3> source_vertices;
  bool multi_component = false;  // stiffness decouples per component

  int vertex_count() const { return static_cast<int>(source_vertices.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }

  // Node-arc incidence matrix S (E x V): -1 at the lower vertex index of
  // each edge, +1 at the higher.
  Eigen::SparseMatrix<double> incidence() const;

  // Deformed vertex positions D * x.
  std::vector<Vec3> apply() const;
};

// Assembles the system from mesh connectivity (error on a mesh without
// edges) or from an explicit edge list. Disconnected meshes are accepted and
// flagged; the stiffness term simply decouples per component.
NicpState build_system(const TriMesh& source);
NicpState build_system(std::vector<Vec3> vertices,
                       std::vector<std::array<int, 2>> edges);

struct Correspondences {
  std::vector<Vec3> points;   // nearest target surface points, per vertex
  std::vector<Vec3> normals;  // target normals at those points
  Eigen::VectorXd weights;    // gamma where the normal gate passes, else 0
};

// Per deformed-source vertex: nearest point on the target surface and the
// normal-consistency gate w_i = gamma if n_i . n_i* > theta else 0.
Correspondences find_correspondences(const TriMesh& deformed,
                                     const ClosestPointQuery& target,
                                     double normal_threshold, double match_weight);
Correspondences find_correspondences(const TriMesh& deformed, const TriMesh& target,
                                     double normal_threshold, double match_weight);

// One Gauss-Newton step: solves the stacked system
//   A = [alpha (S kron I4); diag(w) D],  b = [0; w ⊙ P*]
// as damped normal equations (A^T A + lambda I) x = A^T b + lambda x_prev
// (damping is proximal about the current x so lambda does not bias the
// solution toward the zero block) and writes x back into the state. Throws
// "no valid correspondences" when all weights vanish and a factorization
// error with a condition estimate when the damped system is still singular.
void solve_stage(NicpState& state, const std::vector<Vec3>& targets,
                 const Eigen::VectorXd& weights, double alpha, double lambda);

// The raw solve behind solve_stage, without the all-zero weight gate: with
// w = 0 the minimizer keeps x at x_prev (identity stays identity).
Eigen::MatrixXd solve_affine_system(const NicpState& state,
                                    const std::vector<Vec3>& targets,
                                    const Eigen::VectorXd& weights, double alpha,
                                    double lambda);

struct NicpStats {
  int stages = 0;
  int inner_iterations = 0;
  double final_mean_motion = 0.0;
  // Weighted data residual |diag(w)(Dx - P*)|_F^2 after each inner solve,
  // grouped per stage.
  std::vector<std::vector<double>> stage_residuals;
};

// Full coarse-to-fine registration. The source must already be rigidly
// prealigned (rigid_icp). Output shares the source topology and labels.
TriMesh nicp_register(const TriMesh& source, const TriMesh& target,
                      const NicpConfig& cfg = {}, NicpStats* stats = nullptr);

}  // namespace meshreg

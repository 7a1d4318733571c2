#include "meshreg/nicp.hpp"

#include <Eigen/SparseCholesky>
#include <numeric>
#include <stdexcept>

namespace meshreg {
namespace {

int component_count(int n, const std::vector<std::array<int, 2>>& edges) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  int components = n;
  for (const auto& e : edges) {
    const int a = find(e[0]), b = find(e[1]);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components;
}

}  // namespace

void NicpConfig::validate() const {
  if (stiffness_schedule.empty()) {
    throw std::invalid_argument("empty stiffness schedule");
  }
  for (size_t i = 0; i < stiffness_schedule.size(); ++i) {
    if (stiffness_schedule[i] <= 0.0) {
      throw std::invalid_argument("stiffness values must be positive");
    }
    if (i > 0 && stiffness_schedule[i] >= stiffness_schedule[i - 1]) {
      throw std::invalid_argument("stiffness schedule must be strictly decreasing");
    }
  }
  if (normal_threshold < 0.0 || normal_threshold > 1.0) {
    throw std::invalid_argument("normal threshold outside [0, 1]");
  }
  if (match_weight <= 0.0) throw std::invalid_argument("match weight must be positive");
  if (tikhonov < 0.0) throw std::invalid_argument("negative Tikhonov damping");
  if (inner_iters_per_stage < 1) {
    throw std::invalid_argument("inner_iters_per_stage must be >= 1");
  }
}

Eigen::SparseMatrix<double> NicpState::incidence() const {
  Eigen::SparseMatrix<double> S(edge_count(), vertex_count());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * edges.size());
  for (size_t e = 0; e < edges.size(); ++e) {
    trips.emplace_back(static_cast<int>(e), edges[e][0], -1.0);
    trips.emplace_back(static_cast<int>(e), edges[e][1], 1.0);
  }
  S.setFromTriplets(trips.begin(), trips.end());
  return S;
}

std::vector<Vec3> NicpState::apply() const {
  const Eigen::MatrixXd V = D * x;
  std::vector<Vec3> out(V.rows());
  for (int i = 0; i < V.rows(); ++i) out[i] = V.row(i).transpose();
  return out;
}

NicpState build_system(std::vector<Vec3> vertices,
                       std::vector<std::array<int, 2>> edges) {
  if (edges.empty()) throw std::runtime_error("deformation graph has no edges");
  const int n = static_cast<int>(vertices.size());
  for (const auto& e : edges) {
    if (e[0] < 0 || e[0] >= n || e[1] < 0 || e[1] >= n || e[0] == e[1]) {
      throw std::invalid_argument("invalid edge in deformation graph");
    }
  }

  NicpState state;
  state.multi_component = component_count(n, edges) > 1;
  state.edges = std::move(edges);
  state.source_vertices = std::move(vertices);

  state.x.resize(4 * n, 3);
  for (int i = 0; i < n; ++i) {
    state.x.block<4, 3>(4 * i, 0) << Mat3::Identity(), Eigen::RowVector3d::Zero();
  }

  state.D.resize(n, 4 * n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * n);
  for (int i = 0; i < n; ++i) {
    const Vec3& v = state.source_vertices[i];
    trips.emplace_back(i, 4 * i + 0, v.x());
    trips.emplace_back(i, 4 * i + 1, v.y());
    trips.emplace_back(i, 4 * i + 2, v.z());
    trips.emplace_back(i, 4 * i + 3, 1.0);
  }
  state.D.setFromTriplets(trips.begin(), trips.end());
  return state;
}

NicpState build_system(const TriMesh& source) {
  return build_system(source.vertices, mesh_edges(source));
}

Correspondences find_correspondences(const TriMesh& deformed,
                                     const ClosestPointQuery& target,
                                     double normal_threshold, double match_weight) {
  const auto normals = compute_vertex_normals(deformed);
  Correspondences c;
  const size_t n = deformed.vertices.size();
  c.points.resize(n);
  c.normals.resize(n);
  c.weights = Eigen::VectorXd::Zero(n);
  for (size_t i = 0; i < n; ++i) {
    const SurfaceHit hit = target.closest(deformed.vertices[i]);
    c.points[i] = hit.point;
    c.normals[i] = hit.normal;
    if (normals[i].dot(hit.normal) > normal_threshold) {
      c.weights[i] = match_weight;
    }
  }
  return c;
}

Correspondences find_correspondences(const TriMesh& deformed, const TriMesh& target,
                                     double normal_threshold, double match_weight) {
  if (target.empty()) throw std::invalid_argument("empty correspondence target");
  return find_correspondences(deformed, ClosestPointQuery(target), normal_threshold,
                              match_weight);
}

Eigen::MatrixXd solve_affine_system(const NicpState& state,
                                    const std::vector<Vec3>& targets,
                                    const Eigen::VectorXd& weights, double alpha,
                                    double lambda) {
  const int n = state.vertex_count();
  if (static_cast<int>(targets.size()) != n || weights.size() != n) {
    throw std::invalid_argument("correspondence arrays do not match vertex count");
  }

  // A^T A assembled directly: the stiffness block contributes the graph
  // Laplacian (kron I4) scaled alpha^2; each data row contributes
  // w_i^2 d_i d_i^T with d_i = [v_i; 1] at diagonal block i.
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(16 * (2 * state.edges.size() + n) + 4 * n);
  const double a2 = alpha * alpha;
  for (const auto& e : state.edges) {
    for (int r = 0; r < 4; ++r) {
      trips.emplace_back(4 * e[0] + r, 4 * e[0] + r, a2);
      trips.emplace_back(4 * e[1] + r, 4 * e[1] + r, a2);
      trips.emplace_back(4 * e[0] + r, 4 * e[1] + r, -a2);
      trips.emplace_back(4 * e[1] + r, 4 * e[0] + r, -a2);
    }
  }
  Eigen::MatrixXd rhs = lambda * state.x;
  for (int i = 0; i < n; ++i) {
    const double w2 = weights[i] * weights[i];
    if (w2 == 0.0) continue;
    Eigen::Vector4d d;
    d << state.source_vertices[i], 1.0;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        trips.emplace_back(4 * i + r, 4 * i + c, w2 * d[r] * d[c]);
      }
    }
    rhs.block<4, 3>(4 * i, 0) += w2 * d * targets[i].transpose();
  }
  for (int k = 0; k < 4 * n; ++k) trips.emplace_back(k, k, lambda);

  Eigen::SparseMatrix<double> M(4 * n, 4 * n);
  M.setFromTriplets(trips.begin(), trips.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(M);
  if (solver.info() != Eigen::Success) {
    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < M.rows(); ++k) {
      const double d = std::abs(M.coeff(k, k));
      dmax = std::max(dmax, d);
      dmin = std::min(dmin, d);
    }
    throw std::runtime_error(
        "deformation system factorization failed; diagonal condition estimate " +
        std::to_string(dmax / std::max(dmin, 1e-300)));
  }
  Eigen::MatrixXd x = solver.solve(rhs);
  if (!x.allFinite()) {
    throw std::runtime_error("deformation solve produced non-finite parameters");
  }
  return x;
}

void solve_stage(NicpState& state, const std::vector<Vec3>& targets,
                 const Eigen::VectorXd& weights, double alpha, double lambda) {
  if (weights.size() == 0 || weights.maxCoeff() <= 0.0) {
    throw std::runtime_error("no valid correspondences");
  }
  state.x = solve_affine_system(state, targets, weights, alpha, lambda);
}

TriMesh nicp_register(const TriMesh& source, const TriMesh& target,
                      const NicpConfig& cfg, NicpStats* stats) {
  cfg.validate();
  if (target.empty()) throw std::invalid_argument("empty registration target");

  NicpState state = build_system(source);
  const auto [lo, hi] = source.bounds();
  const double inner_tol =
      cfg.inner_tol > 0.0 ? cfg.inner_tol : 1e-4 * (hi - lo).norm();

  const ClosestPointQuery target_query(target);
  TriMesh deformed = source;
  NicpStats local;
  NicpStats& st = stats ? *stats : local;
  st = NicpStats{};

  for (double alpha : cfg.stiffness_schedule) {
    ++st.stages;
    st.stage_residuals.emplace_back();
    for (int inner = 0; inner < cfg.inner_iters_per_stage; ++inner) {
      const auto corr = find_correspondences(deformed, target_query,
                                             cfg.normal_threshold, cfg.match_weight);
      solve_stage(state, corr.points, corr.weights, alpha, cfg.tikhonov);

      const auto moved = state.apply();
      double motion = 0.0, residual = 0.0;
      for (int i = 0; i < state.vertex_count(); ++i) {
        motion += (moved[i] - deformed.vertices[i]).norm();
        residual += corr.weights[i] * corr.weights[i] *
                    (moved[i] - corr.points[i]).squaredNorm();
      }
      motion /= state.vertex_count();
      deformed.vertices = moved;
      ++st.inner_iterations;
      st.stage_residuals.back().push_back(residual);
      st.final_mean_motion = motion;
      if (motion < inner_tol) break;
    }
  }
  return deformed;
}

}  // namespace meshreg

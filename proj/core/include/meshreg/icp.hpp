// Rigid alignment by iterated closest point with SVD (Kabsch) updates.
#pragma once

#include "meshreg/mesh.hpp"

namespace meshreg {

// Pose p such that p applied to `source` minimizes mean nearest-neighbor
// distance to `target` vertices. Each iteration matches every source vertex
// to its nearest target vertex, drops pairs beyond 3x the median pair
// distance, and solves the best rigid motion in closed form. Terminates when
// the RMS correspondence distance changes by less than `tol` (mm) or after
// `max_iter` iterations. Throws "rank-deficient alignment" when the source
// has fewer than 3 non-collinear vertices.
RigidPose rigid_icp(const TriMesh& source, const TriMesh& target,
                    int max_iter = 50, double tol = 1e-6);

}  // namespace meshreg

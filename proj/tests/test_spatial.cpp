// kd-tree, closest-point queries, and rigid ICP.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "meshreg/icp.hpp"
#include "meshreg/kdtree.hpp"
#include "meshreg/mesh_distance.hpp"
#include "support.hpp"

using namespace meshreg;

namespace {

std::vector<Vec3> random_points(Rng& rng, int n, double extent) {
  std::vector<Vec3> pts(n);
  for (auto& p : pts) {
    p = Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
             rng.uniform(-extent, extent));
  }
  return pts;
}

}  // namespace

TEST_CASE("kd-tree nearest matches brute force on 1000 queries") {
  Rng rng(101);
  const auto cloud = random_points(rng, 500, 40.0);
  const KdTree tree(cloud);
  for (int q = 0; q < 1000; ++q) {
    const Vec3 query(rng.uniform(-60, 60), rng.uniform(-60, 60),
                     rng.uniform(-60, 60));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : cloud) best = std::min(best, (p - query).squaredNorm());
    const auto hit = tree.nearest(query);
    CHECK(hit.sq_dist == doctest::Approx(best).epsilon(1e-12));
    CHECK((cloud[hit.index] - query).squaredNorm() ==
          doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("kd-tree rejects an empty cloud") {
  CHECK_THROWS_AS(KdTree(std::vector<Vec3>{}), std::invalid_argument);
}

TEST_CASE("closest point on triangle covers every Voronoi region") {
  const Vec3 a(0, 0, 0), b(2, 0, 0), c(0, 2, 0);

  // Interior projection.
  Vec3 bary;
  Vec3 p = closest_point_on_triangle(Vec3(0.5, 0.5, 3), a, b, c, &bary);
  CHECK((p - Vec3(0.5, 0.5, 0)).norm() < 1e-14);
  CHECK(bary.sum() == doctest::Approx(1.0));

  // Vertex regions.
  CHECK((closest_point_on_triangle(Vec3(-1, -1, 0), a, b, c) - a).norm() < 1e-14);
  CHECK((closest_point_on_triangle(Vec3(5, -1, 1), a, b, c) - b).norm() < 1e-14);
  CHECK((closest_point_on_triangle(Vec3(-1, 5, -2), a, b, c) - c).norm() < 1e-14);

  // Edge regions.
  CHECK((closest_point_on_triangle(Vec3(1, -2, 0), a, b, c) - Vec3(1, 0, 0)).norm() <
        1e-14);
  CHECK((closest_point_on_triangle(Vec3(-3, 1, 1), a, b, c) - Vec3(0, 1, 0)).norm() <
        1e-14);
  p = closest_point_on_triangle(Vec3(2, 2, 0), a, b, c);
  CHECK((p - Vec3(1, 1, 0)).norm() < 1e-14);
}

TEST_CASE("closest point barycentrics reconstruct the hit point") {
  Rng rng(55);
  const Vec3 a(0, 0, 0), b(3, 0, 1), c(1, 2, -1);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 q(rng.uniform(-4, 6), rng.uniform(-4, 6), rng.uniform(-4, 6));
    Vec3 bary;
    const Vec3 p = closest_point_on_triangle(q, a, b, c, &bary);
    CHECK((bary.x() * a + bary.y() * b + bary.z() * c - p).norm() < 1e-12);
    CHECK(bary.minCoeff() >= -1e-12);
    CHECK(bary.sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("surface query matches exhaustive search over all faces") {
  const TriMesh blob = testing::make_blob(2);
  const ClosestPointQuery query(blob);
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec3 q(rng.uniform(-50, 50), rng.uniform(-50, 50),
                 rng.uniform(-50, 50));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : blob.faces) {
      const Vec3 p = closest_point_on_triangle(q, blob.vertices[f[0]],
                                               blob.vertices[f[1]],
                                               blob.vertices[f[2]]);
      best = std::min(best, (p - q).norm());
    }
    const SurfaceHit hit = query.closest(q);
    CHECK(hit.distance == doctest::Approx(best).epsilon(1e-10));
    CHECK(hit.face >= 0);
    CHECK(hit.normal.norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("mean surface distance between concentric spheres is the gap") {
  const TriMesh inner = make_icosphere(28.0, 3);
  const TriMesh outer = make_icosphere(30.0, 3);
  // Vertices of the inner sphere sit ~2 mm under the outer surface; the
  // facet chords bias the value slightly low.
  CHECK(mean_surface_distance(inner.vertices, outer) ==
        doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("rigid ICP recovers a known pose") {
  const TriMesh blob = testing::make_blob(2);
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const RigidPose gt = testing::random_pose(rng, 8.0, 10.0);
    TriMesh moved = blob;
    moved.apply_pose(gt);

    const RigidPose est = rigid_icp(blob, moved);
    // Same vertex set, so the alignment should be essentially exact.
    for (int i = 0; i < blob.vertex_count(); ++i) {
      CHECK((est.apply(blob.vertices[i]) - moved.vertices[i]).norm() < 1e-6);
    }
  }
}

TEST_CASE("rigid ICP pulls a jittered cloud back onto the surface") {
  const TriMesh blob = testing::make_blob(2);
  Rng rng(29);
  RigidPose nudge;
  nudge.translation = Vec3(3, -2, 4);
  nudge.rotation_deg = Vec3(4, 3, -5);
  TriMesh moved = blob;
  moved.apply_pose(nudge);

  const RigidPose est = rigid_icp(blob, moved);
  std::vector<Vec3> aligned;
  for (const auto& v : blob.vertices) aligned.push_back(est.apply(v));
  CHECK(mean_surface_distance(aligned, moved) < 0.05);
}

TEST_CASE("rigid ICP refuses degenerate geometry") {
  TriMesh line;
  line.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
  const TriMesh blob = testing::make_blob(1);
  CHECK_THROWS_WITH_AS(rigid_icp(line, blob),
                       doctest::Contains("rank-deficient"), std::runtime_error);
}

// Microbenchmarks for the hot paths of the registration loop: rendering,
// contour extraction, Hausdorff scoring, one full objective evaluation,
// plus the offline NICP and CMA-ES building blocks.
#include <benchmark/benchmark.h>

#include "meshreg/cmaes.hpp"
#include "meshreg/mesh_distance.hpp"
#include "meshreg/nicp.hpp"
#include "meshreg/objective.hpp"
#include "meshreg/primitives.hpp"
#include "meshreg/render.hpp"
#include "meshreg/rng.hpp"
#include "meshreg/shape_model.hpp"

namespace {

using namespace meshreg;

const CameraIntrinsics kCam{500, 500, 160, 120, 320, 240};

// Icosphere with the four contour label classes painted on as great-circle
// vertex strips; geometry detail is irrelevant to the timings.
TriMesh labeled_sphere(int subdivisions) {
  TriMesh mesh = make_icosphere(30.0, subdivisions);
  auto strip = [&](auto keep) {
    std::vector<int> ids;
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      if (keep(mesh.vertices[i])) ids.push_back(i);
    }
    return ids;
  };
  mesh.labels["sil"] = strip([](const Vec3& v) { return std::abs(v.x()) < 3.0; });
  mesh.labels["lig"] = strip([](const Vec3& v) { return std::abs(v.y()) < 3.0; });
  mesh.labels["ridge_L"] =
      strip([](const Vec3& v) { return std::abs(v.z()) < 3.0 && v.x() < 0; });
  mesh.labels["ridge_R"] =
      strip([](const Vec3& v) { return std::abs(v.z()) < 3.0 && v.x() > 0; });
  return mesh;
}

RigidPose front_pose() {
  RigidPose pose;
  pose.translation = Vec3(0, 0, 300);
  return pose;
}

ShapeModel bench_model(int subdivisions) {
  const TriMesh base = labeled_sphere(subdivisions);
  ShapeModel model;
  model.canonical = base;
  model.x0 = base.flatten();
  model.U = Eigen::MatrixXd::Zero(model.x0.size(), 3);
  for (int i = 0; i < model.x0.size(); ++i) model.U(i, i % 3) = 1.0;
  model.U.colwise().normalize();
  model.sigma = Eigen::Vector3d(3, 2, 1);
  return model;
}

void BM_RenderDepthMask(benchmark::State& state) {
  const TriMesh mesh = labeled_sphere(static_cast<int>(state.range(0)));
  const RigidPose pose = front_pose();
  for (auto _ : state) {
    MaskImage mask;
    DepthImage depth;
    render_depth_mask(mesh, pose, kCam, mask, depth);
    benchmark::DoNotOptimize(depth.pixels.data());
  }
  state.SetLabel(std::to_string(mesh.face_count()) + " faces");
}
BENCHMARK(BM_RenderDepthMask)->Arg(2)->Arg(3);

void BM_RenderLabeledContours(benchmark::State& state) {
  const TriMesh mesh = labeled_sphere(2);
  const RigidPose pose = front_pose();
  for (auto _ : state) {
    const auto channels = render_full(mesh, pose, kCam);
    benchmark::DoNotOptimize(channels.full_mask.pixels.data());
  }
}
BENCHMARK(BM_RenderLabeledContours);

void BM_SilhouetteExtraction(benchmark::State& state) {
  MaskImage mask;
  DepthImage depth;
  render_depth_mask(labeled_sphere(3), front_pose(), kCam, mask, depth);
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_silhouette(mask));
  }
}
BENCHMARK(BM_SilhouetteExtraction);

void BM_Hausdorff(benchmark::State& state) {
  Rng rng(7);
  const auto points = [&](int count) {
    std::vector<Vec2> p(count);
    for (auto& q : p) q = Vec2(rng.uniform(0, 320), rng.uniform(0, 240));
    return p;
  };
  const auto a = points(static_cast<int>(state.range(0)));
  const auto b = points(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(hausdorff(a, b));
}
BENCHMARK(BM_Hausdorff)->Arg(256)->Arg(1024);

void BM_ObjectiveEvaluation(benchmark::State& state) {
  const ShapeModel model = bench_model(2);
  const LabelImageSet observed =
      render_full(model.canonical, front_pose(), kCam);
  const RegistrationObjective objective(model, observed, kCam);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(9);
  theta.head<3>() = front_pose().translation;
  theta[0] += 2.0;
  for (auto _ : state) benchmark::DoNotOptimize(objective(theta));
}
BENCHMARK(BM_ObjectiveEvaluation);

void BM_ClosestSurfacePoint(benchmark::State& state) {
  const TriMesh mesh = labeled_sphere(3);
  const ClosestPointQuery query(mesh);
  Rng rng(11);
  std::vector<Vec3> probes(1024);
  for (auto& p : probes) {
    p = Vec3(rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(-40, 40));
  }
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(query.closest(probes[i++ & 1023]));
  }
}
BENCHMARK(BM_ClosestSurfacePoint);

void BM_NicpRegister(benchmark::State& state) {
  const TriMesh source = make_icosphere(1.0, 2);
  TriMesh target = make_icosphere(1.0, 3);
  for (auto& v : target.vertices) v = Vec3(1.2 * v.x(), v.y(), 0.9 * v.z());
  NicpConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nicp_register(source, target, cfg));
  }
}
BENCHMARK(BM_NicpRegister)->Unit(benchmark::kMillisecond);

void BM_CmaesSphere(benchmark::State& state) {
  OptConfig cfg;
  cfg.bounds.assign(9, {-5.0, 5.0});
  cfg.popsize = 15;
  cfg.maxiter = 50;
  cfg.ftol = 0;
  cfg.xtol = 0;
  const auto sphere = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(9, 2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(minimize(sphere, x0, cfg));
  }
  state.SetLabel("50 generations, 9-D");
}
BENCHMARK(BM_CmaesSphere)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

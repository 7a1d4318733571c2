#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "meshreg/mesh_io.hpp"
#include "meshreg/pipeline.hpp"
#include "support.hpp"

using namespace meshreg;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const fs::path& out) {
  RunConfig cfg;
  cfg.seed = 11;
  cfg.output_dir = out;
  cfg.sampling.count = 10;
  cfg.sampling.translation_range_mm = 15.0;
  cfg.sampling.rotation_range_deg = 10.0;
  cfg.sampling.base_pose.translation = Vec3(0, 0, 300);
  cfg.refinement.maxiter = 5;
  cfg.refinement.popsize = 8;
  return cfg;
}

}  // namespace

TEST_CASE("run configuration round-trips through JSON") {
  RunConfig cfg = small_config("/tmp/somewhere");
  cfg.model_modes = 4;
  cfg.camera.fx = 321.0;
  cfg.nicp.normal_threshold = 0.6;
  cfg.augment.erase_prob = 0.11;
  cfg.refinement.sigma0 = 0.25;

  const RunConfig back = RunConfig::from_json(cfg.to_json());
  CHECK(back.seed == cfg.seed);
  CHECK(back.output_dir == cfg.output_dir);
  CHECK(back.model_modes == 4);
  CHECK(back.camera.fx == 321.0);
  CHECK(back.sampling.count == 10);
  CHECK((back.sampling.base_pose.translation - Vec3(0, 0, 300)).norm() == 0.0);
  CHECK(back.nicp.normal_threshold == 0.6);
  CHECK(back.augment.erase_prob == 0.11);
  CHECK(back.refinement.sigma0 == 0.25);
}

TEST_CASE("missing JSON keys fall back to defaults") {
  const RunConfig cfg = RunConfig::from_json(nlohmann::json{{"seed", 5}});
  CHECK(cfg.seed == 5);
  CHECK(cfg.model_modes == 10);
  CHECK(cfg.camera.width == 320);
  CHECK(cfg.refinement.translation_bound_mm == 20.0);
}

TEST_CASE("config files load and save") {
  const auto dir = testing::temp_dir("pipeline_config");
  RunConfig cfg = small_config(dir);
  cfg.save(dir / "run.json");
  const RunConfig back = RunConfig::load(dir / "run.json");
  CHECK(back.sampling.count == cfg.sampling.count);

  std::ofstream bad(dir / "bad.json");
  bad << "{ not json";
  bad.close();
  CHECK_THROWS_AS(RunConfig::load(dir / "bad.json"), std::exception);
  CHECK_THROWS_AS(RunConfig::load(dir / "missing.json"), std::runtime_error);
}

TEST_CASE("frame records round-trip including optional fields") {
  FrameRecord r;
  r.frame_id = 12;
  r.pose.translation = Vec3(1, 2, 3);
  r.pose.rotation_deg = Vec3(-4, 5, -6);
  r.shape = Eigen::Vector3d(0.1, -0.2, 0.3);
  r.split = "val";
  r.images["sil"] = "frames/frame_000012_sil.png";
  r.cost = 1.25;
  r.failed = false;

  const FrameRecord back = FrameRecord::from_json(r.to_json());
  CHECK(back.frame_id == 12);
  CHECK((back.pose.translation - r.pose.translation).norm() == 0.0);
  CHECK((back.shape - r.shape).norm() == 0.0);
  CHECK(back.split == "val");
  CHECK(back.images.at("sil") == r.images.at("sil"));
  REQUIRE(back.cost.has_value());
  CHECK(*back.cost == 1.25);
  CHECK_FALSE(back.tre.has_value());
  CHECK_FALSE(back.failed);

  FrameRecord failed;
  failed.frame_id = 1;
  failed.failed = true;
  CHECK(FrameRecord::from_json(failed.to_json()).failed);
}

TEST_CASE("label image sets round-trip through the file convention") {
  const auto dir = testing::temp_dir("pipeline_images");
  const ShapeModel model = testing::planted_model(testing::make_blob(2));
  RigidPose pose;
  pose.translation = Vec3(0, 0, 300);
  const CameraIntrinsics cam{500, 500, 160, 120, 320, 240};
  const LabelImageSet set =
      render_full(eval_shape(model, Eigen::VectorXd::Zero(3)), pose, cam);

  const auto paths = save_label_images(set, dir / "frame_000000");
  CHECK(paths.count("sil") == 1);
  CHECK(paths.count("mask") == 1);
  CHECK(paths.count("depth") == 1);
  for (const auto& [name, path] : paths) CHECK(fs::exists(path));

  const LabelImageSet back = load_label_images(dir / "frame_000000");
  REQUIRE(back.channels.size() == set.channels.size());
  for (const auto& [name, img] : set.channels) {
    CHECK(back.channels.at(name) == img);
  }
  CHECK(back.full_mask == set.full_mask);
  // Depth round-trips through 16-bit quantization.
  REQUIRE(back.depth.pixels.size() == set.depth.pixels.size());
  for (size_t i = 0; i < set.depth.pixels.size(); ++i) {
    CHECK(std::abs(back.depth.pixels[i] - set.depth.pixels[i]) <= 0.051f);
  }

  // Missing files load as absent members.
  const LabelImageSet none = load_label_images(dir / "frame_000099");
  CHECK(none.channels.empty());
  CHECK(none.full_mask.empty());
  CHECK(none.depth.empty());
}

TEST_CASE("dataset generation writes frames, manifest, and split") {
  const auto dir = testing::temp_dir("pipeline_dataset");
  const RunConfig cfg = small_config(dir);
  const ShapeModel model = testing::planted_model(testing::make_blob(2));

  const DatasetSummary summary = generate_dataset_cmd(cfg, model);
  CHECK(summary.accepted == 10);
  CHECK(summary.attempts >= summary.accepted);
  CHECK_FALSE(summary.hit_rejection_cap);
  REQUIRE(fs::exists(summary.manifest_path));

  nlohmann::json manifest;
  std::ifstream(summary.manifest_path) >> manifest;
  REQUIRE(manifest.at("frames").size() == 10);
  CHECK(manifest.at("accepted") == 10);
  CHECK(manifest.contains("config"));

  int val = 0;
  for (const auto& jf : manifest.at("frames")) {
    const FrameRecord rec = FrameRecord::from_json(jf);
    val += rec.split == "val";
    // Poses must stay near the base pose.
    CHECK(std::abs(rec.pose.translation.z() - 300.0) <= 15.0);
  }
  CHECK(val == 1);  // 10% of a 10-frame set

  const LabelImageSet frame0 = load_label_images(dir / "frames" / "frame_000000");
  CHECK(count_nonzero(frame0.full_mask) > 0);
  CHECK(frame0.channels.count("sil") == 1);

  // Same seed, same dataset: the generator is a pure function of the config.
  const auto dir2 = testing::temp_dir("pipeline_dataset2");
  RunConfig cfg2 = cfg;
  cfg2.output_dir = dir2;
  generate_dataset_cmd(cfg2, model);
  const LabelImageSet again = load_label_images(dir2 / "frames" / "frame_000000");
  CHECK(again.full_mask == frame0.full_mask);
  for (const auto& [name, img] : frame0.channels) {
    CHECK(again.channels.at(name) == img);
  }
}

TEST_CASE("an impossible acceptance gate hits the rejection cap") {
  const auto dir = testing::temp_dir("pipeline_cap");
  RunConfig cfg = small_config(dir);
  cfg.sampling.count = 3;
  cfg.sampling.rejection_cap_factor = 2;
  cfg.sampling.base_pose.translation = Vec3(0, 0, -500);  // behind the camera
  const ShapeModel model = testing::planted_model(testing::make_blob(1));

  const DatasetSummary summary = generate_dataset_cmd(cfg, model);
  CHECK(summary.accepted == 0);
  CHECK(summary.attempts == 6);
  CHECK(summary.hit_rejection_cap);
  CHECK(fs::exists(summary.manifest_path));  // partial manifest still written
}

TEST_CASE("refinement rejects an all-empty observation") {
  const auto dir = testing::temp_dir("pipeline_refine_empty");
  const RunConfig cfg = small_config(dir);
  const ShapeModel model = testing::planted_model(testing::make_blob(1));
  LabelImageSet empty;
  empty.channels["sil"] = MaskImage(320, 240, 0);
  CHECK_THROWS_WITH_AS(refine_cmd(cfg, model, RigidPose{}, empty),
                       doctest::Contains("nothing to register"),
                       std::runtime_error);
}

TEST_CASE("refinement improves the initial cost and writes a record") {
  const auto dir = testing::temp_dir("pipeline_refine");
  RunConfig cfg = small_config(dir);
  cfg.refinement.maxiter = 10;
  const ShapeModel model = testing::planted_model(testing::make_blob(2));

  RigidPose gt;
  gt.translation = Vec3(0, 0, 300);
  const LabelImageSet observed =
      render_full(eval_shape(model, Eigen::VectorXd::Zero(3)), gt, cfg.camera);

  RigidPose init = gt;
  init.translation += Vec3(3, -2, 5);
  init.rotation_deg += Vec3(2, -1, 2);

  const RegistrationObjective objective(model, observed, cfg.camera);
  const double init_cost =
      objective.cost(init, Eigen::VectorXd::Zero(3));

  const RefineResult result =
      refine_cmd(cfg, model, init, observed, /*rigid_only=*/true, "smoke");
  CHECK(result.cost <= init_cost);
  CHECK(result.opt.evaluations > 0);
  CHECK(result.shape.isZero());
  CHECK(fs::exists(dir / "smoke.json"));
  CHECK(fs::exists(dir / "smoke_overlay.png"));

  const std::ifstream in(dir / "smoke.json");
  REQUIRE(in.good());
}

TEST_CASE("tracking carries the estimate across frames") {
  const auto dir = testing::temp_dir("pipeline_track");
  RunConfig cfg = small_config(dir);
  cfg.refinement.maxiter = 3;
  const ShapeModel model = testing::planted_model(testing::make_blob(2));

  RigidPose gt;
  gt.translation = Vec3(0, 0, 300);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  std::vector<LabelImageSet> frames;
  frames.push_back(render_full(eval_shape(model, zero), gt, cfg.camera));
  RigidPose gt2 = gt;
  gt2.translation += Vec3(1.5, 0, 0);
  frames.push_back(render_full(eval_shape(model, zero), gt2, cfg.camera));

  RigidPose init = gt;
  init.translation += Vec3(2, 1, -2);
  const auto records =
      track_sequence_cmd(cfg, model, init, frames, /*rigid_only=*/true);
  REQUIRE(records.size() == 2);
  CHECK(records[0].frame_id == 0);
  CHECK(records[1].frame_id == 1);
  for (const auto& r : records) {
    CHECK_FALSE(r.failed);
    REQUIRE(r.cost.has_value());
    CHECK(std::isfinite(*r.cost));
  }
}

TEST_CASE("a frame with no usable channels is flagged, not fatal") {
  const auto dir = testing::temp_dir("pipeline_track_fail");
  RunConfig cfg = small_config(dir);
  cfg.refinement.maxiter = 2;
  const ShapeModel model = testing::planted_model(testing::make_blob(2));

  RigidPose gt;
  gt.translation = Vec3(0, 0, 300);
  std::vector<LabelImageSet> frames;
  frames.push_back(
      render_full(eval_shape(model, Eigen::VectorXd::Zero(3)), gt, cfg.camera));
  LabelImageSet dead;
  dead.channels["sil"] = MaskImage(320, 240, 0);
  frames.push_back(dead);

  const auto records = track_sequence_cmd(cfg, model, gt, frames, true);
  REQUIRE(records.size() == 2);
  CHECK_FALSE(records[0].failed);
  CHECK(records[1].failed);
  // The previous estimate carries forward.
  CHECK((records[1].pose.translation - records[0].pose.translation).norm() ==
        0.0);
}

TEST_CASE("evaluation reports TRE and rejects unmatched frames") {
  const ShapeModel model = testing::planted_model(testing::make_blob(2));
  RunConfig cfg = small_config(testing::temp_dir("pipeline_eval"));

  FrameRecord gt;
  gt.frame_id = 0;
  gt.pose.translation = Vec3(0, 0, 300);
  gt.shape = Eigen::Vector3d(0.5, -0.2, 0.1);

  FrameRecord est = gt;
  est.pose.translation += Vec3(0, 3, 4);

  const Vec3 tumor(5, 0, 0);
  const EvalSummary summary = evaluate_cmd({est}, {gt}, tumor, model, cfg);
  REQUIRE(summary.frames.size() == 1);
  REQUIRE(summary.frames[0].tre.has_value());
  CHECK(*summary.frames[0].tre == doctest::Approx(5.0));
  CHECK(summary.mean_tre == doctest::Approx(5.0));
  CHECK(summary.median_tre == doctest::Approx(5.0));

  FrameRecord unmatched;
  unmatched.frame_id = 42;
  CHECK_THROWS_WITH_AS(evaluate_cmd({unmatched}, {gt}, tumor, model, cfg),
                       doctest::Contains("42"), std::runtime_error);

  // Rigid-only estimates (empty shape) evaluate against padded zeros.
  FrameRecord rigid = gt;
  rigid.shape = Eigen::VectorXd();
  const EvalSummary rigid_summary =
      evaluate_cmd({rigid}, {gt}, tumor, model, cfg);
  CHECK(*rigid_summary.frames[0].tre > 0.0);  // gt shape is nonzero
}

TEST_CASE("evaluation recomputes contour distances when images exist") {
  const auto dir = testing::temp_dir("pipeline_eval_images");
  RunConfig cfg = small_config(dir);
  const ShapeModel model = testing::planted_model(testing::make_blob(2));

  RigidPose pose;
  pose.translation = Vec3(0, 0, 300);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  const LabelImageSet set = render_full(eval_shape(model, zero), pose, cfg.camera);

  FrameRecord gt;
  gt.frame_id = 0;
  gt.pose = pose;
  gt.shape = zero;
  gt.images = save_label_images(set, dir / "frame_000000");

  const EvalSummary summary =
      evaluate_cmd({gt}, {gt}, Vec3(5, 0, 0), model, cfg);
  REQUIRE(summary.frames.size() == 1);
  CHECK(*summary.frames[0].tre == 0.0);
  REQUIRE(summary.frames[0].cost.has_value());
  CHECK(*summary.frames[0].cost <= 1e-9);  // identical render
}

TEST_CASE("overlay compositing respects the background contract") {
  const ShapeModel model = testing::planted_model(testing::make_blob(2));
  const CameraIntrinsics cam{500, 500, 160, 120, 320, 240};
  RigidPose pose;
  pose.translation = Vec3(0, 0, 300);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);

  const MaskImage plain = render_overlay(model, pose, zero, cam);
  CHECK(count_nonzero(plain) > 0);

  MaskImage background(cam.width, cam.height, 0);
  background.at(0, 0) = 255;  // corner pixel, far from the blob
  const MaskImage over = render_overlay(model, pose, zero, cam, &background);
  CHECK(over.at(0, 0) == 255);
  CHECK(count_nonzero(over) >= count_nonzero(plain));

  const MaskImage wrong(16, 16, 0);
  CHECK_THROWS_AS(render_overlay(model, pose, zero, cam, &wrong),
                  std::invalid_argument);
}

TEST_CASE("model building registers a corpus end to end") {
  const auto dir = testing::temp_dir("pipeline_build");
  const TriMesh canonical = testing::make_blob(1);
  const ShapeModel planted = testing::planted_model(canonical);
  const auto corpus = testing::planted_corpus(planted, 5, 123);

  fs::create_directories(dir / "corpus");
  save_mesh(canonical, dir / "canonical.ply");
  for (size_t j = 0; j < corpus.size(); ++j) {
    save_mesh(corpus[j], dir / "corpus" / ("mesh_" + std::to_string(j) + ".ply"));
  }

  RunConfig cfg;
  cfg.canonical_mesh = dir / "canonical.ply";
  cfg.corpus_dir = dir / "corpus";
  cfg.model_file = dir / "model.bin";
  cfg.model_modes = 2;
  // Small stage budget keeps the corpus registration fast.
  cfg.nicp.stiffness_schedule = {5.0, 1.0, 0.5};
  cfg.nicp.inner_iters_per_stage = 4;

  const auto path = build_shape_model_cmd(cfg);
  CHECK(path == dir / "model.bin");
  REQUIRE(fs::exists(path));
  const ShapeModel model = load_model(path);
  CHECK(model.mode_count() == 2);
  CHECK(model.vertex_count() == canonical.vertex_count());

  REQUIRE(fs::exists(dir / "model.bin.meta.json"));
  nlohmann::json meta;
  std::ifstream(dir / "model.bin.meta.json") >> meta;
  CHECK(meta.at("corpus").size() == 5);
  CHECK(meta.at("modes") == 2);
  CHECK(meta.at("corpus")[0].contains("fnv1a64"));
}

TEST_CASE("model building fails when too few meshes register") {
  const auto dir = testing::temp_dir("pipeline_build_fail");
  const TriMesh canonical = testing::make_blob(1);
  fs::create_directories(dir / "corpus");
  save_mesh(canonical, dir / "canonical.ply");
  // One valid mesh against K = 2: not enough even if it registers.
  save_mesh(canonical, dir / "corpus" / "only.ply");

  RunConfig cfg;
  cfg.canonical_mesh = dir / "canonical.ply";
  cfg.corpus_dir = dir / "corpus";
  cfg.model_file = dir / "model.bin";
  cfg.model_modes = 2;
  CHECK_THROWS_AS(build_shape_model_cmd(cfg), std::runtime_error);
}

// meshreg: shape model building, synthetic data generation, and
// contour-based pose/shape registration from the command line.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <cstdio>
#include <regex>
#include <set>
#include <sstream>

#include "meshreg/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace meshreg;

namespace {

std::vector<double> parse_numbers(const std::string& text, size_t expected,
                                  const char* what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  if (expected > 0 && vals.size() != expected) {
    throw CLI::ValidationError(std::string(what) + ": expected " +
                               std::to_string(expected) + " comma-separated values");
  }
  return vals;
}

RigidPose parse_pose(const std::string& text) {
  const auto v = parse_numbers(text, 6, "pose");
  RigidPose pose;
  pose.translation = Vec3(v[0], v[1], v[2]);
  pose.rotation_deg = Vec3(v[3], v[4], v[5]);
  return pose;
}

Vec3 parse_point(const std::string& text) {
  const auto v = parse_numbers(text, 3, "point");
  return Vec3(v[0], v[1], v[2]);
}

Eigen::VectorXd parse_coeffs(const std::string& text) {
  if (text.empty()) return Eigen::VectorXd();
  const auto v = parse_numbers(text, 0, "coefficients");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

json pose_json(const RigidPose& pose) {
  return json{{"translation", {pose.translation.x(), pose.translation.y(),
                               pose.translation.z()}},
              {"rotation_deg", {pose.rotation_deg.x(), pose.rotation_deg.y(),
                                pose.rotation_deg.z()}}};
}

std::vector<FrameRecord> load_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  const json& arr = j.is_object() && j.contains("frames") ? j.at("frames") : j;
  if (!arr.is_array()) {
    throw std::runtime_error(path.string() + ": expected a record array or a "
                             "manifest with a \"frames\" array");
  }
  std::vector<FrameRecord> records;
  for (const auto& item : arr) records.push_back(FrameRecord::from_json(item));
  return records;
}

// Frame image prefixes in a directory, ordered by frame id. Any file named
// frame_<id>_<suffix>.png marks frame <id>.
std::vector<fs::path> frame_prefixes(const fs::path& dir) {
  const std::regex pattern("frame_([0-9]+)_.*");
  std::set<long> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) ids.insert(std::stol(m[1].str()));
  }
  std::vector<fs::path> prefixes;
  for (long id : ids) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "frame_%06ld", id);
    prefixes.push_back(dir / stem);
  }
  return prefixes;
}

struct ConfigArgs {
  std::string config_path;
  uint64_t seed = 0;
  bool seed_set = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run configuration JSON");
    cmd->add_option("--seed", seed, "Random seed (overrides the config)")
        ->each([this](const std::string&) { seed_set = true; });
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    if (seed_set) cfg.seed = seed;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deformable mesh-to-contour registration toolkit"};
  app.require_subcommand(1);

  // build-model
  auto* build = app.add_subcommand(
      "build-model", "Register a mesh corpus to the canonical mesh and build "
                     "the PCA shape model");
  ConfigArgs build_cfg;
  build_cfg.attach(build);
  std::string canonical, corpus, model_out;
  int modes = 0;
  build->add_option("--canonical", canonical, "Canonical mesh (.obj/.ply)");
  build->add_option("--corpus", corpus, "Directory of corpus meshes");
  build->add_option("--out", model_out, "Output model file");
  build->add_option("--modes", modes, "Number of deformation modes");

  // gen-data
  auto* gen = app.add_subcommand(
      "gen-data", "Render and augment a synthetic labeled dataset");
  ConfigArgs gen_cfg;
  gen_cfg.attach(gen);
  std::string gen_model, gen_out;
  int gen_count = 0;
  gen->add_option("--model", gen_model, "Shape model file");
  gen->add_option("--out", gen_out, "Output dataset directory");
  gen->add_option("--count", gen_count, "Number of frames to generate");

  // register
  auto* reg = app.add_subcommand(
      "register", "Refine pose (and shape) against one frame's contour images");
  ConfigArgs reg_cfg;
  reg_cfg.attach(reg);
  std::string reg_model, reg_masks, reg_init, reg_out, reg_name = "register";
  bool reg_rigid = false;
  reg->add_option("--model", reg_model, "Shape model file");
  reg->add_option("--masks", reg_masks, "Frame image prefix (expects "
                  "<prefix>_<channel>.png)")->required();
  reg->add_option("--init", reg_init, "Initial pose tx,ty,tz,rx,ry,rz (mm, deg)");
  reg->add_flag("--rigid-only", reg_rigid, "Optimize pose only, no shape");
  reg->add_option("--out", reg_out, "Output directory for the record and overlay");
  reg->add_option("--name", reg_name, "Record name inside the output directory");

  // track
  auto* track = app.add_subcommand(
      "track", "Track pose (and shape) across an ordered frame sequence");
  ConfigArgs track_cfg;
  track_cfg.attach(track);
  std::string track_model, track_frames, track_init, track_out;
  bool track_rigid = false;
  track->add_option("--model", track_model, "Shape model file");
  track->add_option("--frames", track_frames, "Directory of frame images")
      ->required();
  track->add_option("--init", track_init, "Initial pose for the first frame");
  track->add_flag("--rigid-only", track_rigid, "Optimize pose only, no shape");
  track->add_option("--out", track_out, "Output directory for track.json");

  // evaluate
  auto* eval = app.add_subcommand(
      "evaluate", "Score estimated records against ground truth (tumor TRE)");
  ConfigArgs eval_cfg;
  eval_cfg.attach(eval);
  std::string eval_est, eval_gt, eval_tumor, eval_model, eval_out;
  eval->add_option("--est", eval_est, "Estimated records JSON")->required();
  eval->add_option("--gt", eval_gt, "Ground-truth records/manifest JSON")
      ->required();
  eval->add_option("--tumor", eval_tumor, "Canonical-frame target x,y,z (mm)")
      ->required();
  eval->add_option("--model", eval_model, "Shape model file");
  eval->add_option("--out", eval_out, "Report JSON path (default: stdout)");

  // render-overlay
  auto* overlay = app.add_subcommand(
      "render-overlay", "Draw the posed, shaped model contours over a background");
  ConfigArgs overlay_cfg;
  overlay_cfg.attach(overlay);
  std::string ov_model, ov_pose, ov_shape, ov_background, ov_out;
  overlay->add_option("--model", ov_model, "Shape model file");
  overlay->add_option("--pose", ov_pose, "Pose tx,ty,tz,rx,ry,rz (mm, deg)");
  overlay->add_option("--shape", ov_shape, "Shape coefficients a1,a2,...");
  overlay->add_option("--background", ov_background, "Background mask PNG");
  overlay->add_option("--out", ov_out, "Output PNG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) {
      RunConfig cfg = build_cfg.resolve();
      if (!canonical.empty()) cfg.canonical_mesh = canonical;
      if (!corpus.empty()) cfg.corpus_dir = corpus;
      if (!model_out.empty()) cfg.model_file = model_out;
      if (modes > 0) cfg.model_modes = modes;
      const auto path = build_shape_model_cmd(cfg);
      std::cout << path.string() << "\n";
    } else if (*gen) {
      RunConfig cfg = gen_cfg.resolve();
      if (!gen_model.empty()) cfg.model_file = gen_model;
      if (!gen_out.empty()) cfg.output_dir = gen_out;
      if (gen_count > 0) cfg.sampling.count = gen_count;
      const DatasetSummary summary = generate_dataset_cmd(cfg);
      std::cout << json{{"accepted", summary.accepted},
                        {"attempts", summary.attempts},
                        {"partial", summary.hit_rejection_cap},
                        {"manifest", summary.manifest_path.string()}}
                       .dump(2)
                << "\n";
      if (summary.hit_rejection_cap) return 2;
    } else if (*reg) {
      RunConfig cfg = reg_cfg.resolve();
      if (!reg_model.empty()) cfg.model_file = reg_model;
      if (!reg_out.empty()) cfg.output_dir = reg_out;
      const ShapeModel model = load_model(cfg.model_file);
      const RigidPose init = reg_init.empty() ? RigidPose{} : parse_pose(reg_init);
      const LabelImageSet masks = load_label_images(reg_masks);
      const std::string record = reg_out.empty() ? "" : reg_name;
      const RefineResult result =
          refine_cmd(cfg, model, init, masks, reg_rigid, record);
      std::cout << json{{"pose", pose_json(result.pose)},
                        {"shape", std::vector<double>(
                                      result.shape.data(),
                                      result.shape.data() + result.shape.size())},
                        {"cost", result.cost},
                        {"evaluations", result.opt.evaluations},
                        {"termination", to_string(result.opt.termination_reason)}}
                       .dump(2)
                << "\n";
    } else if (*track) {
      RunConfig cfg = track_cfg.resolve();
      if (!track_model.empty()) cfg.model_file = track_model;
      if (!track_out.empty()) cfg.output_dir = track_out;
      const ShapeModel model = load_model(cfg.model_file);
      const RigidPose init =
          track_init.empty() ? RigidPose{} : parse_pose(track_init);
      std::vector<LabelImageSet> frames;
      for (const auto& prefix : frame_prefixes(track_frames)) {
        frames.push_back(load_label_images(prefix));
      }
      const auto records =
          track_sequence_cmd(cfg, model, init, frames, track_rigid);
      json out = json::array();
      for (const auto& r : records) out.push_back(r.to_json());
      if (!cfg.output_dir.empty()) {
        fs::create_directories(cfg.output_dir);
        std::ofstream f(cfg.output_dir / "track.json");
        f << json{{"frames", out}}.dump(2) << "\n";
        std::cout << (cfg.output_dir / "track.json").string() << "\n";
      } else {
        std::cout << json{{"frames", out}}.dump(2) << "\n";
      }
    } else if (*eval) {
      RunConfig cfg = eval_cfg.resolve();
      if (!eval_model.empty()) cfg.model_file = eval_model;
      const ShapeModel model = load_model(cfg.model_file);
      const EvalSummary summary =
          evaluate_cmd(load_records(eval_est), load_records(eval_gt),
                       parse_point(eval_tumor), model, cfg);
      const json report = summary.to_json();
      if (eval_out.empty()) {
        std::cout << report.dump(2) << "\n";
      } else {
        std::ofstream f(eval_out);
        if (!f) throw std::runtime_error("cannot write " + eval_out);
        f << report.dump(2) << "\n";
        std::cout << "mean_tre_mm " << summary.mean_tre << "\n"
                  << "median_tre_mm " << summary.median_tre << "\n";
      }
    } else if (*overlay) {
      RunConfig cfg = overlay_cfg.resolve();
      if (!ov_model.empty()) cfg.model_file = ov_model;
      const ShapeModel model = load_model(cfg.model_file);
      const RigidPose pose = ov_pose.empty() ? RigidPose{} : parse_pose(ov_pose);
      const Eigen::VectorXd shape = parse_coeffs(ov_shape);
      MaskImage background;
      const MaskImage* bg = nullptr;
      if (!ov_background.empty()) {
        background = read_mask_png(ov_background);
        bg = &background;
      }
      const MaskImage img = render_overlay(model, pose, shape, cfg.camera, bg);
      write_mask_png(img, ov_out);
      std::cout << ov_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

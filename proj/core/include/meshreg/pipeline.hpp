// End-to-end commands behind the CLI: corpus registration + model build,
// synthetic dataset generation, bounded pose-shape refinement, sequence
// tracking, and evaluation.
#pragma once

#include <json.hpp>
#include <optional>

#include "meshreg/augment.hpp"
#include "meshreg/cmaes.hpp"
#include "meshreg/nicp.hpp"
#include "meshreg/objective.hpp"
#include "meshreg/png_io.hpp"
#include "meshreg/render.hpp"
#include "meshreg/shape_model.hpp"

namespace meshreg {

struct SamplingSpec {
  int count = 100;
  double translation_range_mm = 50.0;  // component-wise offset bound
  double rotation_range_deg = 20.0;
  int min_contour_types = 2;  // frames with fewer non-empty channels drop
  int rejection_cap_factor = 10;  // attempts allowed per requested frame
  RigidPose base_pose;
};

struct RefinementSpec {
  double translation_bound_mm = 20.0;  // box half-width around the init
  double rotation_bound_deg = 10.0;
  int maxiter = 100;
  int popsize = 15;  // registration default; 0 would select the heuristic
  double sigma0 = 0.3;
  double ftol = 1e-8;
  double xtol = 1e-10;
};

struct RunConfig {
  uint64_t seed = 0;

  std::filesystem::path canonical_mesh;
  std::filesystem::path corpus_dir;
  std::filesystem::path model_file;
  std::filesystem::path masks_dir;
  std::filesystem::path output_dir;

  CameraIntrinsics camera{500.0, 500.0, 160.0, 120.0, 320, 240};
  int model_modes = 10;

  SamplingSpec sampling;
  RefinementSpec refinement;
  NicpConfig nicp;
  AugmentConfig augment;

  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct FrameRecord {
  int frame_id = 0;
  RigidPose pose;
  Eigen::VectorXd shape;  // empty for rigid-only records
  std::string split;      // "train"/"val" in dataset manifests
  std::map<std::string, std::string> images;  // channel name -> file path
  std::optional<double> cost;
  std::optional<double> tre;
  bool failed = false;

  nlohmann::json to_json() const;
  static FrameRecord from_json(const nlohmann::json& j);
};

// Loads/saves the channel PNG set for one frame: <prefix>_<channel>.png
// for the contour channels plus <prefix>_mask.png and <prefix>_depth.png.
// Missing channel files load as absent channels.
LabelImageSet load_label_images(const std::filesystem::path& prefix);
std::map<std::string, std::string> save_label_images(
    const LabelImageSet& images, const std::filesystem::path& prefix);

// Registers every corpus mesh to the canonical (rigid prealign, then NICP),
// builds the K-mode PCA model, and writes the binary container plus a JSON
// metadata sidecar (corpus hashes, build date). Per-mesh failures are
// logged and skipped; fewer than K survivors abort.
std::filesystem::path build_shape_model_cmd(const RunConfig& cfg);

struct DatasetSummary {
  int accepted = 0;
  int attempts = 0;
  bool hit_rejection_cap = false;
  std::filesystem::path manifest_path;
  std::vector<FrameRecord> frames;
};

// Samples poses around the base pose, renders, keeps frames with at least
// min_contour_types non-empty channels, augments the kept frames, and
// writes images plus a manifest with a 90/10 train/val split. Acceptance
// depends only on the clean render; augmentation draws happen afterwards.
DatasetSummary generate_dataset_cmd(const RunConfig& cfg, const ShapeModel& model);
DatasetSummary generate_dataset_cmd(const RunConfig& cfg);

struct RefineResult {
  RigidPose pose;
  Eigen::VectorXd shape;  // zero vector in rigid-only mode
  double cost = 0.0;
  OptResult opt;
};

// Algorithm: theta0 = (init pose, zero shape), bounds = init +- the
// refinement spec (shape in [-1,1]^K), CMA-ES over the weighted Hausdorff
// cost. With rigid_only the shape block is dropped from the search. When
// record_name is non-empty a FrameRecord JSON and an overlay PNG are
// written into output_dir. Throws "nothing to register" when every
// observed channel is empty.
RefineResult refine_cmd(const RunConfig& cfg, const ShapeModel& model,
                        const RigidPose& init_pose, const LabelImageSet& masks,
                        bool rigid_only = false, const std::string& record_name = "");

// Chained tracking: each frame starts from the previous frame's optimum and
// repeats refinement until the translation update drops below 1 mm or 10
// rounds. Failed frames are flagged and the previous estimate carries over.
std::vector<FrameRecord> track_sequence_cmd(const RunConfig& cfg,
                                            const ShapeModel& model,
                                            const RigidPose& init_pose,
                                            const std::vector<LabelImageSet>& frames,
                                            bool rigid_only = false);

struct EvalSummary {
  std::vector<FrameRecord> frames;  // est records annotated with TRE
  double mean_tre = 0.0;
  double median_tre = 0.0;

  nlohmann::json to_json() const;
};

// Per-frame tumor TRE of est against gt (matched by frame id; missing ids
// are an error listing them). When an est record references readable
// channel images, per-channel Hausdorff terms are recomputed into the
// report.
EvalSummary evaluate_cmd(const std::vector<FrameRecord>& est,
                         const std::vector<FrameRecord>& gt, const Vec3& tumor,
                         const ShapeModel& model, const RunConfig& cfg);

// Contour channels of the shaped, posed model drawn over an optional
// background (max-composited white strokes).
MaskImage render_overlay(const ShapeModel& model, const RigidPose& pose,
                         const Eigen::VectorXd& shape, const CameraIntrinsics& cam,
                         const MaskImage* background = nullptr);

}  // namespace meshreg

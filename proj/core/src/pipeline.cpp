#include "meshreg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numeric>

#include "meshreg/hash.hpp"
#include "meshreg/icp.hpp"
#include "meshreg/mesh_io.hpp"

namespace meshreg {
namespace {

using json = nlohmann::json;

// The contour channel inventory used across dataset files and records.
const std::vector<std::string> kContourChannels = {"lig", "ridge_L", "ridge_R",
                                                   "sil"};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

json pose_to_json(const RigidPose& pose) {
  return json{{"rotation_deg", {pose.rotation_deg.x(), pose.rotation_deg.y(),
                                pose.rotation_deg.z()}},
              {"translation", {pose.translation.x(), pose.translation.y(),
                               pose.translation.z()}}};
}

RigidPose pose_from_json(const json& j) {
  RigidPose pose;
  if (j.contains("rotation_deg")) {
    const auto r = j.at("rotation_deg").get<std::array<double, 3>>();
    pose.rotation_deg = Vec3(r[0], r[1], r[2]);
  }
  if (j.contains("translation")) {
    const auto t = j.at("translation").get<std::array<double, 3>>();
    pose.translation = Vec3(t[0], t[1], t[2]);
  }
  return pose;
}

json camera_to_json(const CameraIntrinsics& cam) {
  return json{{"fx", cam.fx}, {"fy", cam.fy},       {"cx", cam.cx},
              {"cy", cam.cy}, {"width", cam.width}, {"height", cam.height}};
}

CameraIntrinsics camera_from_json(const json& j, CameraIntrinsics cam) {
  cam.fx = get_or(j, "fx", cam.fx);
  cam.fy = get_or(j, "fy", cam.fy);
  cam.cx = get_or(j, "cx", cam.cx);
  cam.cy = get_or(j, "cy", cam.cy);
  cam.width = get_or(j, "width", cam.width);
  cam.height = get_or(j, "height", cam.height);
  return cam;
}

uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
  }
  return h;
}

std::string utc_date_string() {
  const auto now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd padded_shape(const FrameRecord& record, int K) {
  Eigen::VectorXd shape = Eigen::VectorXd::Zero(K);
  const int n = std::min<int>(K, record.shape.size());
  shape.head(n) = record.shape.head(n);
  return shape;
}

int count_nonempty_channels(const LabelImageSet& images) {
  int n = 0;
  for (const auto& [name, mask] : images.channels) n += count_nonzero(mask) > 0;
  return n;
}

}  // namespace

void RunConfig::validate() const {
  camera.validate();
  if (model_modes < 1) throw std::invalid_argument("model_modes must be >= 1");
  if (sampling.count < 1) throw std::invalid_argument("sampling count must be >= 1");
  if (sampling.translation_range_mm < 0 || sampling.rotation_range_deg < 0) {
    throw std::invalid_argument("negative sampling range");
  }
  if (sampling.min_contour_types < 0 ||
      sampling.min_contour_types > static_cast<int>(kContourChannels.size())) {
    throw std::invalid_argument("min_contour_types out of range");
  }
  if (sampling.rejection_cap_factor < 1) {
    throw std::invalid_argument("rejection_cap_factor must be >= 1");
  }
  if (refinement.translation_bound_mm <= 0 || refinement.rotation_bound_deg <= 0) {
    throw std::invalid_argument("refinement bounds must be positive");
  }
  if (refinement.maxiter < 1) throw std::invalid_argument("maxiter must be >= 1");
  if (refinement.sigma0 <= 0) throw std::invalid_argument("sigma0 must be positive");
  nicp.validate();
  augment.validate();
}

json RunConfig::to_json() const {
  return json{
      {"seed", seed},
      {"paths",
       {{"canonical_mesh", canonical_mesh.string()},
        {"corpus_dir", corpus_dir.string()},
        {"model_file", model_file.string()},
        {"masks_dir", masks_dir.string()},
        {"output_dir", output_dir.string()}}},
      {"camera", camera_to_json(camera)},
      {"model_modes", model_modes},
      {"sampling",
       {{"count", sampling.count},
        {"translation_range_mm", sampling.translation_range_mm},
        {"rotation_range_deg", sampling.rotation_range_deg},
        {"min_contour_types", sampling.min_contour_types},
        {"rejection_cap_factor", sampling.rejection_cap_factor},
        {"base_pose", pose_to_json(sampling.base_pose)}}},
      {"refinement",
       {{"translation_bound_mm", refinement.translation_bound_mm},
        {"rotation_bound_deg", refinement.rotation_bound_deg},
        {"maxiter", refinement.maxiter},
        {"popsize", refinement.popsize},
        {"sigma0", refinement.sigma0},
        {"ftol", refinement.ftol},
        {"xtol", refinement.xtol}}},
      {"nicp",
       {{"stiffness_schedule", nicp.stiffness_schedule},
        {"normal_threshold", nicp.normal_threshold},
        {"match_weight", nicp.match_weight},
        {"tikhonov", nicp.tikhonov},
        {"inner_iters_per_stage", nicp.inner_iters_per_stage},
        {"inner_tol", nicp.inner_tol}}},
      {"augment",
       {{"contour_dilate_min", augment.contour_dilate_min},
        {"contour_dilate_max", augment.contour_dilate_max},
        {"contour_max_deletions", augment.contour_max_deletions},
        {"contour_deletion_fraction", augment.contour_deletion_fraction},
        {"elastic_sigma", augment.elastic_sigma},
        {"elastic_alpha", augment.elastic_alpha},
        {"mask_jitter_prob", augment.mask_jitter_prob},
        {"mask_kernel_min", augment.mask_kernel_min},
        {"mask_kernel_max", augment.mask_kernel_max},
        {"occluder_prob", augment.occluder_prob},
        {"occluder_count_min", augment.occluder_count_min},
        {"occluder_count_max", augment.occluder_count_max},
        {"occluder_length_min", augment.occluder_length_min},
        {"occluder_length_max", augment.occluder_length_max},
        {"occluder_width_min", augment.occluder_width_min},
        {"occluder_width_max", augment.occluder_width_max},
        {"occluder_angle_deg", augment.occluder_angle_deg},
        {"erase_prob", augment.erase_prob},
        {"erase_count_max", augment.erase_count_max},
        {"erase_ratio_min", augment.erase_ratio_min},
        {"erase_ratio_max", augment.erase_ratio_max},
        {"erase_aspect_min", augment.erase_aspect_min},
        {"erase_aspect_max", augment.erase_aspect_max},
        {"normalize_prob", augment.normalize_prob},
        {"normalize_a_max", augment.normalize_a_max},
        {"normalize_b_min", augment.normalize_b_min},
        {"scale_prob", augment.scale_prob},
        {"scale_min", augment.scale_min},
        {"scale_max", augment.scale_max},
        {"shift_min", augment.shift_min},
        {"shift_max", augment.shift_max},
        {"noise_sigma_min", augment.noise_sigma_min},
        {"noise_sigma_max", augment.noise_sigma_max}}}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig cfg;
  cfg.seed = get_or<uint64_t>(j, "seed", cfg.seed);
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    cfg.canonical_mesh = get_or<std::string>(p, "canonical_mesh", "");
    cfg.corpus_dir = get_or<std::string>(p, "corpus_dir", "");
    cfg.model_file = get_or<std::string>(p, "model_file", "");
    cfg.masks_dir = get_or<std::string>(p, "masks_dir", "");
    cfg.output_dir = get_or<std::string>(p, "output_dir", "");
  }
  if (j.contains("camera")) cfg.camera = camera_from_json(j.at("camera"), cfg.camera);
  cfg.model_modes = get_or(j, "model_modes", cfg.model_modes);
  if (j.contains("sampling")) {
    const auto& s = j.at("sampling");
    cfg.sampling.count = get_or(s, "count", cfg.sampling.count);
    cfg.sampling.translation_range_mm =
        get_or(s, "translation_range_mm", cfg.sampling.translation_range_mm);
    cfg.sampling.rotation_range_deg =
        get_or(s, "rotation_range_deg", cfg.sampling.rotation_range_deg);
    cfg.sampling.min_contour_types =
        get_or(s, "min_contour_types", cfg.sampling.min_contour_types);
    cfg.sampling.rejection_cap_factor =
        get_or(s, "rejection_cap_factor", cfg.sampling.rejection_cap_factor);
    if (s.contains("base_pose")) {
      cfg.sampling.base_pose = pose_from_json(s.at("base_pose"));
    }
  }
  if (j.contains("refinement")) {
    const auto& r = j.at("refinement");
    cfg.refinement.translation_bound_mm =
        get_or(r, "translation_bound_mm", cfg.refinement.translation_bound_mm);
    cfg.refinement.rotation_bound_deg =
        get_or(r, "rotation_bound_deg", cfg.refinement.rotation_bound_deg);
    cfg.refinement.maxiter = get_or(r, "maxiter", cfg.refinement.maxiter);
    cfg.refinement.popsize = get_or(r, "popsize", cfg.refinement.popsize);
    cfg.refinement.sigma0 = get_or(r, "sigma0", cfg.refinement.sigma0);
    cfg.refinement.ftol = get_or(r, "ftol", cfg.refinement.ftol);
    cfg.refinement.xtol = get_or(r, "xtol", cfg.refinement.xtol);
  }
  if (j.contains("nicp")) {
    const auto& n = j.at("nicp");
    cfg.nicp.stiffness_schedule = get_or(n, "stiffness_schedule",
                                         cfg.nicp.stiffness_schedule);
    cfg.nicp.normal_threshold = get_or(n, "normal_threshold",
                                       cfg.nicp.normal_threshold);
    cfg.nicp.match_weight = get_or(n, "match_weight", cfg.nicp.match_weight);
    cfg.nicp.tikhonov = get_or(n, "tikhonov", cfg.nicp.tikhonov);
    cfg.nicp.inner_iters_per_stage =
        get_or(n, "inner_iters_per_stage", cfg.nicp.inner_iters_per_stage);
    cfg.nicp.inner_tol = get_or(n, "inner_tol", cfg.nicp.inner_tol);
  }
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    auto& g = cfg.augment;
    g.contour_dilate_min = get_or(a, "contour_dilate_min", g.contour_dilate_min);
    g.contour_dilate_max = get_or(a, "contour_dilate_max", g.contour_dilate_max);
    g.contour_max_deletions =
        get_or(a, "contour_max_deletions", g.contour_max_deletions);
    g.contour_deletion_fraction =
        get_or(a, "contour_deletion_fraction", g.contour_deletion_fraction);
    g.elastic_sigma = get_or(a, "elastic_sigma", g.elastic_sigma);
    g.elastic_alpha = get_or(a, "elastic_alpha", g.elastic_alpha);
    g.mask_jitter_prob = get_or(a, "mask_jitter_prob", g.mask_jitter_prob);
    g.mask_kernel_min = get_or(a, "mask_kernel_min", g.mask_kernel_min);
    g.mask_kernel_max = get_or(a, "mask_kernel_max", g.mask_kernel_max);
    g.occluder_prob = get_or(a, "occluder_prob", g.occluder_prob);
    g.occluder_count_min = get_or(a, "occluder_count_min", g.occluder_count_min);
    g.occluder_count_max = get_or(a, "occluder_count_max", g.occluder_count_max);
    g.occluder_length_min = get_or(a, "occluder_length_min", g.occluder_length_min);
    g.occluder_length_max = get_or(a, "occluder_length_max", g.occluder_length_max);
    g.occluder_width_min = get_or(a, "occluder_width_min", g.occluder_width_min);
    g.occluder_width_max = get_or(a, "occluder_width_max", g.occluder_width_max);
    g.occluder_angle_deg = get_or(a, "occluder_angle_deg", g.occluder_angle_deg);
    g.erase_prob = get_or(a, "erase_prob", g.erase_prob);
    g.erase_count_max = get_or(a, "erase_count_max", g.erase_count_max);
    g.erase_ratio_min = get_or(a, "erase_ratio_min", g.erase_ratio_min);
    g.erase_ratio_max = get_or(a, "erase_ratio_max", g.erase_ratio_max);
    g.erase_aspect_min = get_or(a, "erase_aspect_min", g.erase_aspect_min);
    g.erase_aspect_max = get_or(a, "erase_aspect_max", g.erase_aspect_max);
    g.normalize_prob = get_or(a, "normalize_prob", g.normalize_prob);
    g.normalize_a_max = get_or(a, "normalize_a_max", g.normalize_a_max);
    g.normalize_b_min = get_or(a, "normalize_b_min", g.normalize_b_min);
    g.scale_prob = get_or(a, "scale_prob", g.scale_prob);
    g.scale_min = get_or(a, "scale_min", g.scale_min);
    g.scale_max = get_or(a, "scale_max", g.scale_max);
    g.shift_min = get_or(a, "shift_min", g.shift_min);
    g.shift_max = get_or(a, "shift_max", g.shift_max);
    g.noise_sigma_min = get_or(a, "noise_sigma_min", g.noise_sigma_min);
    g.noise_sigma_max = get_or(a, "noise_sigma_max", g.noise_sigma_max);
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(read_json_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void RunConfig::save(const std::filesystem::path& path) const {
  write_json_file(to_json(), path);
}

json FrameRecord::to_json() const {
  json j{{"frame_id", frame_id},
         {"pose", pose_to_json(pose)},
         {"shape", vector_to_json(shape)},
         {"images", images},
         {"failed", failed}};
  if (!split.empty()) j["split"] = split;
  if (cost) j["cost"] = *cost;
  if (tre) j["tre"] = *tre;
  return j;
}

FrameRecord FrameRecord::from_json(const json& j) {
  FrameRecord r;
  r.frame_id = j.at("frame_id").get<int>();
  if (j.contains("pose")) r.pose = pose_from_json(j.at("pose"));
  if (j.contains("shape")) r.shape = vector_from_json(j.at("shape"));
  r.split = get_or<std::string>(j, "split", "");
  if (j.contains("images")) {
    r.images = j.at("images").get<std::map<std::string, std::string>>();
  }
  if (j.contains("cost")) r.cost = j.at("cost").get<double>();
  if (j.contains("tre")) r.tre = j.at("tre").get<double>();
  r.failed = get_or(j, "failed", false);
  return r;
}

LabelImageSet load_label_images(const std::filesystem::path& prefix) {
  LabelImageSet out;
  for (const auto& name : kContourChannels) {
    std::filesystem::path p = prefix;
    p += "_" + name + ".png";
    if (std::filesystem::exists(p)) out.channels[name] = read_mask_png(p);
  }
  std::filesystem::path mask_path = prefix;
  mask_path += "_mask.png";
  if (std::filesystem::exists(mask_path)) out.full_mask = read_mask_png(mask_path);
  std::filesystem::path depth_path = prefix;
  depth_path += "_depth.png";
  if (std::filesystem::exists(depth_path)) out.depth = read_depth_png(depth_path);
  return out;
}

std::map<std::string, std::string> save_label_images(
    const LabelImageSet& images, const std::filesystem::path& prefix) {
  std::map<std::string, std::string> paths;
  for (const auto& [name, mask] : images.channels) {
    std::filesystem::path p = prefix;
    p += "_" + name + ".png";
    write_mask_png(mask, p);
    paths[name] = p.string();
  }
  if (!images.full_mask.empty()) {
    std::filesystem::path p = prefix;
    p += "_mask.png";
    write_mask_png(images.full_mask, p);
    paths["mask"] = p.string();
  }
  if (!images.depth.empty()) {
    std::filesystem::path p = prefix;
    p += "_depth.png";
    write_depth_png(images.depth, p);
    paths["depth"] = p.string();
  }
  return paths;
}

std::filesystem::path build_shape_model_cmd(const RunConfig& cfg) {
  cfg.validate();
  const TriMesh canonical = load_mesh(cfg.canonical_mesh);

  std::vector<std::filesystem::path> corpus_files;
  for (const auto& entry : std::filesystem::directory_iterator(cfg.corpus_dir)) {
    const auto ext = entry.path().extension().string();
    if (ext == ".obj" || ext == ".ply") corpus_files.push_back(entry.path());
  }
  std::sort(corpus_files.begin(), corpus_files.end());
  if (static_cast<int>(corpus_files.size()) < cfg.model_modes + 1) {
    throw std::runtime_error("corpus has " + std::to_string(corpus_files.size()) +
                             " meshes; need at least " +
                             std::to_string(cfg.model_modes + 1));
  }

  std::vector<TriMesh> registered;
  json corpus_meta = json::array();
  for (const auto& path : corpus_files) {
    try {
      TriMesh target = load_mesh(path);
      // Remove the target's pose so the deformation model captures only
      // shape variation.
      target.apply_pose(rigid_icp(target, canonical));
      registered.push_back(nicp_register(canonical, target, cfg.nicp));
      corpus_meta.push_back({{"path", path.string()},
                             {"fnv1a64", file_hash(path)}});
    } catch (const std::exception& e) {
      std::cerr << "skipping " << path << ": " << e.what() << "\n";
    }
  }
  if (static_cast<int>(registered.size()) < cfg.model_modes) {
    throw std::runtime_error("only " + std::to_string(registered.size()) +
                             " corpus meshes registered; need K=" +
                             std::to_string(cfg.model_modes));
  }

  const ShapeModel model = build_model(canonical, registered, cfg.model_modes);
  std::filesystem::path model_path = cfg.model_file;
  if (model_path.empty()) model_path = cfg.output_dir / "model.bin";
  if (model_path.has_parent_path()) {
    std::filesystem::create_directories(model_path.parent_path());
  }
  save_model(model, model_path);

  std::filesystem::path meta_path = model_path;
  meta_path += ".meta.json";
  write_json_file(json{{"built", utc_date_string()},
                       {"modes", model.mode_count()},
                       {"vertices", model.vertex_count()},
                       {"canonical", cfg.canonical_mesh.string()},
                       {"corpus", corpus_meta}},
                  meta_path);
  return model_path;
}

DatasetSummary generate_dataset_cmd(const RunConfig& cfg, const ShapeModel& model) {
  cfg.validate();
  const auto frames_dir = cfg.output_dir / "frames";
  std::filesystem::create_directories(frames_dir);

  const TriMesh mesh = eval_shape(model, Eigen::VectorXd::Zero(model.mode_count()));
  const int cap = cfg.sampling.rejection_cap_factor * cfg.sampling.count;

  DatasetSummary summary;
  for (int attempt = 0; attempt < cap && summary.accepted < cfg.sampling.count;
       ++attempt) {
    ++summary.attempts;
    Rng rng = frame_rng(cfg.seed, static_cast<uint64_t>(attempt));
    RigidPose pose = cfg.sampling.base_pose;
    for (int c = 0; c < 3; ++c) {
      pose.translation[c] += rng.uniform(-cfg.sampling.translation_range_mm,
                                         cfg.sampling.translation_range_mm);
    }
    for (int c = 0; c < 3; ++c) {
      pose.rotation_deg[c] += rng.uniform(-cfg.sampling.rotation_range_deg,
                                          cfg.sampling.rotation_range_deg);
    }

    LabelImageSet rendered = render_full(mesh, pose, cfg.camera);
    if (count_nonempty_channels(rendered) < cfg.sampling.min_contour_types) {
      continue;
    }

    // Accepted; all further randomness is augmentation-only.
    for (auto& [name, channel] : rendered.channels) {
      channel = augment_contour(channel, cfg.augment, rng);
    }
    rendered.full_mask = augment_mask(rendered.full_mask, cfg.augment, rng);
    rendered.depth = augment_depth(rendered.depth, cfg.augment, rng);

    FrameRecord record;
    record.frame_id = summary.accepted;
    record.pose = pose;
    record.shape = Eigen::VectorXd::Zero(model.mode_count());
    record.split = record.frame_id % 10 == 9 ? "val" : "train";
    char stem[32];
    std::snprintf(stem, sizeof(stem), "frame_%06d", record.frame_id);
    record.images = save_label_images(rendered, frames_dir / stem);
    summary.frames.push_back(std::move(record));
    ++summary.accepted;
  }

  summary.hit_rejection_cap = summary.accepted < cfg.sampling.count;
  if (summary.hit_rejection_cap) {
    std::cerr << "dataset generation accepted " << summary.accepted << "/"
              << cfg.sampling.count << " frames after " << summary.attempts
              << " attempts; writing partial dataset\n";
  }

  json frames = json::array();
  for (const auto& r : summary.frames) frames.push_back(r.to_json());
  summary.manifest_path = cfg.output_dir / "manifest.json";
  write_json_file(json{{"config", cfg.to_json()},
                       {"accepted", summary.accepted},
                       {"attempts", summary.attempts},
                       {"partial", summary.hit_rejection_cap},
                       {"frames", frames}},
                  summary.manifest_path);
  return summary;
}

DatasetSummary generate_dataset_cmd(const RunConfig& cfg) {
  return generate_dataset_cmd(cfg, load_model(cfg.model_file));
}

RefineResult refine_cmd(const RunConfig& cfg, const ShapeModel& model,
                        const RigidPose& init_pose, const LabelImageSet& masks,
                        bool rigid_only, const std::string& record_name) {
  cfg.validate();
  if (count_nonempty_channels(masks) == 0) {
    throw std::runtime_error("nothing to register");
  }

  const RegistrationObjective objective(model, masks, cfg.camera);
  const int K = model.mode_count();
  const int dim = rigid_only ? 6 : 6 + K;

  Eigen::VectorXd x0(dim);
  x0.segment<3>(0) = init_pose.translation;
  x0.segment<3>(3) = init_pose.rotation_deg;
  if (!rigid_only) x0.tail(K).setZero();

  OptConfig opt;
  opt.maxiter = cfg.refinement.maxiter;
  opt.popsize = cfg.refinement.popsize;
  opt.sigma0 = cfg.refinement.sigma0;
  opt.ftol = cfg.refinement.ftol;
  opt.xtol = cfg.refinement.xtol;
  opt.seed = cfg.seed;
  opt.bounds.resize(dim);
  for (int c = 0; c < 3; ++c) {
    opt.bounds[c] = {init_pose.translation[c] - cfg.refinement.translation_bound_mm,
                     init_pose.translation[c] + cfg.refinement.translation_bound_mm};
    opt.bounds[3 + c] = {init_pose.rotation_deg[c] - cfg.refinement.rotation_bound_deg,
                         init_pose.rotation_deg[c] + cfg.refinement.rotation_bound_deg};
  }
  for (int k = 6; k < dim; ++k) opt.bounds[k] = {-1.0, 1.0};

  RefineResult result;
  result.opt = minimize([&](const Eigen::VectorXd& theta) { return objective(theta); },
                        x0, opt);
  result.pose = objective.unpack_pose(result.opt.x_best);
  result.shape = objective.unpack_shape(result.opt.x_best);
  result.cost = result.opt.f_best;

  if (!record_name.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    FrameRecord record;
    record.pose = result.pose;
    record.shape = result.shape;
    record.cost = result.cost;
    const MaskImage overlay =
        render_overlay(model, result.pose, result.shape, cfg.camera);
    const auto overlay_path = cfg.output_dir / (record_name + "_overlay.png");
    write_mask_png(overlay, overlay_path);
    record.images["overlay"] = overlay_path.string();
    write_json_file(record.to_json(), cfg.output_dir / (record_name + ".json"));
  }
  return result;
}

std::vector<FrameRecord> track_sequence_cmd(const RunConfig& cfg,
                                            const ShapeModel& model,
                                            const RigidPose& init_pose,
                                            const std::vector<LabelImageSet>& frames,
                                            bool rigid_only) {
  if (frames.empty()) throw std::invalid_argument("no frames to track");

  // Per-frame chaining per the inference procedure: previous optimum seeds
  // the next frame; within a frame, refinement repeats until the
  // translation update falls below 1 mm or 10 rounds have run.
  constexpr double kTranslationTolMm = 1.0;
  constexpr int kMaxRoundsPerFrame = 10;

  std::vector<FrameRecord> records;
  RigidPose pose = init_pose;
  for (size_t f = 0; f < frames.size(); ++f) {
    FrameRecord record;
    record.frame_id = static_cast<int>(f);
    try {
      RefineResult last;
      for (int round = 0; round < kMaxRoundsPerFrame; ++round) {
        RunConfig round_cfg = cfg;
        round_cfg.seed = frame_seed(frame_seed(cfg.seed, f), round);
        last = refine_cmd(round_cfg, model, pose, frames[f], rigid_only);
        const double update = (last.pose.translation - pose.translation).norm();
        pose = last.pose;
        if (update < kTranslationTolMm) break;
      }
      record.pose = pose;
      record.shape = last.shape;
      record.cost = last.cost;
    } catch (const std::exception& e) {
      std::cerr << "frame " << f << " failed: " << e.what() << "\n";
      record.failed = true;
      record.pose = pose;  // carry the previous estimate forward
      record.shape = Eigen::VectorXd::Zero(rigid_only ? 0 : model.mode_count());
    }
    records.push_back(std::move(record));
  }
  return records;
}

json EvalSummary::to_json() const {
  json per_frame = json::array();
  for (const auto& r : frames) per_frame.push_back(r.to_json());
  return json{{"frames", per_frame},
              {"mean_tre_mm", mean_tre},
              {"median_tre_mm", median_tre}};
}

EvalSummary evaluate_cmd(const std::vector<FrameRecord>& est,
                         const std::vector<FrameRecord>& gt, const Vec3& tumor,
                         const ShapeModel& model, const RunConfig& cfg) {
  std::map<int, const FrameRecord*> gt_by_id;
  for (const auto& r : gt) gt_by_id[r.frame_id] = &r;

  std::vector<int> missing;
  for (const auto& r : est) {
    if (!gt_by_id.count(r.frame_id)) missing.push_back(r.frame_id);
  }
  if (!missing.empty()) {
    std::string ids;
    for (int id : missing) ids += " " + std::to_string(id);
    throw std::runtime_error("frames missing from ground truth:" + ids);
  }

  EvalSummary summary;
  std::vector<double> tres;
  const int K = model.mode_count();
  for (const auto& r : est) {
    const FrameRecord& g = *gt_by_id.at(r.frame_id);
    FrameRecord annotated = r;
    annotated.tre = target_registration_error(tumor, g.pose, padded_shape(g, K),
                                              r.pose, padded_shape(r, K), model);
    tres.push_back(*annotated.tre);

    // Per-channel Hausdorff against the observed images when available.
    if (!g.images.empty()) {
      try {
        LabelImageSet observed;
        for (const auto& name : kContourChannels) {
          const auto it = g.images.find(name);
          if (it != g.images.end()) observed.channels[name] = read_mask_png(it->second);
        }
        if (count_nonempty_channels(observed) > 0) {
          const RegistrationObjective objective(model, observed, cfg.camera);
          annotated.cost = objective.cost(r.pose, padded_shape(r, K));
          for (const auto& [name, d] :
               objective.channel_distances(r.pose, padded_shape(r, K))) {
            annotated.images["hausdorff_" + name] = std::to_string(d);
          }
        }
      } catch (const std::exception&) {
        // Evaluation stays usable without the image files.
      }
    }
    summary.frames.push_back(std::move(annotated));
  }

  std::vector<double> sorted = tres;
  std::sort(sorted.begin(), sorted.end());
  summary.mean_tre =
      std::accumulate(sorted.begin(), sorted.end(), 0.0) / sorted.size();
  summary.median_tre = sorted.size() % 2 == 1
                           ? sorted[sorted.size() / 2]
                           : 0.5 * (sorted[sorted.size() / 2 - 1] +
                                    sorted[sorted.size() / 2]);
  return summary;
}

MaskImage render_overlay(const ShapeModel& model, const RigidPose& pose,
                         const Eigen::VectorXd& shape, const CameraIntrinsics& cam,
                         const MaskImage* background) {
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(model.mode_count());
  coeffs.head(std::min<int>(shape.size(), coeffs.size())) =
      shape.head(std::min<int>(shape.size(), coeffs.size()));
  const LabelImageSet rendered = render_full(eval_shape(model, coeffs), pose, cam);

  MaskImage out(cam.width, cam.height, 0);
  if (background) {
    if (background->width != cam.width || background->height != cam.height) {
      throw std::invalid_argument("background size does not match camera");
    }
    out = *background;
  }
  for (const auto& [name, channel] : rendered.channels) {
    for (size_t i = 0; i < channel.pixels.size(); ++i) {
      if (channel.pixels[i]) out.pixels[i] = 255;
    }
  }
  return out;
}

}  // namespace meshreg

#include "meshreg/shape_model.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace meshreg {
namespace {

constexpr char kMagic[8] = {'M', 'R', 'S', 'M', '0', '0', '0', '1'};

void check_topology(const TriMesh& canonical, const TriMesh& mesh,
                    const std::string& name) {
  if (mesh.vertex_count() != canonical.vertex_count() ||
      mesh.faces != canonical.faces) {
    throw std::runtime_error("corpus mesh " + name +
                             " does not share the canonical topology");
  }
}

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

void write_f64(std::ostream& out, const double* data, size_t count) {
  out.write(reinterpret_cast<const char*>(data), count * sizeof(double));
}

void read_f64(std::istream& in, double* data, size_t count) {
  in.read(reinterpret_cast<char*>(data), count * sizeof(double));
}

}  // namespace

ShapeModel build_model(const TriMesh& canonical, const std::vector<TriMesh>& corpus,
                       int K) {
  if (K < 1) throw std::invalid_argument("component count must be >= 1");
  if (static_cast<int>(corpus.size()) < K) {
    throw std::runtime_error("corpus of " + std::to_string(corpus.size()) +
                             " meshes cannot support K=" + std::to_string(K));
  }
  const int n = static_cast<int>(corpus.size());
  const Eigen::VectorXd base = canonical.flatten();

  Eigen::MatrixXd disp(base.size(), n);
  for (int j = 0; j < n; ++j) {
    check_topology(canonical, corpus[j], "#" + std::to_string(j));
    disp.col(j) = corpus[j].flatten() - base;
  }

  const Eigen::VectorXd mean = disp.rowwise().mean();
  disp.colwise() -= mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(disp, Eigen::ComputeThinU);
  ShapeModel model;
  model.canonical = canonical;
  model.x0 = base + mean;
  model.U = svd.matrixU().leftCols(K);
  // Population convention: covariance (1/N) D D^T has eigenvalues s^2/N.
  model.sigma = svd.singularValues().head(K) / std::sqrt(static_cast<double>(n));
  return model;
}

TriMesh eval_shape(const ShapeModel& model, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != model.mode_count()) {
    throw std::invalid_argument("coefficient vector has wrong length");
  }
  const Eigen::VectorXd clamped = coeffs.cwiseMax(-1.0).cwiseMin(1.0);
  TriMesh out = model.canonical;
  out.unflatten(model.x0 + model.U * model.sigma.cwiseProduct(clamped));
  return out;
}

Eigen::VectorXd project_shape(const ShapeModel& model, const TriMesh& mesh) {
  check_topology(model.canonical, mesh, "(projection input)");
  const Eigen::VectorXd c = model.U.transpose() * (mesh.flatten() - model.x0);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(model.mode_count());
  for (int k = 0; k < model.mode_count(); ++k) {
    if (model.sigma[k] > 0.0) alpha[k] = c[k] / model.sigma[k];
  }
  return alpha;
}

void save_model(const ShapeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_raw<int64_t>(out, model.vertex_count());
  write_raw<int64_t>(out, model.mode_count());
  write_raw<int64_t>(out, model.canonical.face_count());
  write_raw<int64_t>(out, static_cast<int64_t>(model.canonical.labels.size()));

  write_f64(out, model.x0.data(), model.x0.size());
  write_f64(out, model.U.data(), model.U.size());
  write_f64(out, model.sigma.data(), model.sigma.size());
  const Eigen::VectorXd canon = model.canonical.flatten();
  write_f64(out, canon.data(), canon.size());

  for (const auto& f : model.canonical.faces) {
    for (int k = 0; k < 3; ++k) write_raw<int32_t>(out, f[k]);
  }
  for (const auto& [name, chain] : model.canonical.labels) {
    write_raw<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), name.size());
    write_raw<uint32_t>(out, static_cast<uint32_t>(chain.size()));
    for (int idx : chain) write_raw<int32_t>(out, idx);
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

ShapeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not a shape model container");
  }
  const auto V = read_raw<int64_t>(in);
  const auto K = read_raw<int64_t>(in);
  const auto F = read_raw<int64_t>(in);
  const auto L = read_raw<int64_t>(in);
  if (V <= 0 || K <= 0 || F < 0 || L < 0) {
    throw std::runtime_error(path.string() + ": corrupt model header");
  }

  ShapeModel model;
  model.x0.resize(3 * V);
  model.U.resize(3 * V, K);
  model.sigma.resize(K);
  read_f64(in, model.x0.data(), model.x0.size());
  read_f64(in, model.U.data(), model.U.size());
  read_f64(in, model.sigma.data(), model.sigma.size());
  Eigen::VectorXd canon(3 * V);
  read_f64(in, canon.data(), canon.size());
  model.canonical.unflatten(canon);

  model.canonical.faces.resize(F);
  for (auto& f : model.canonical.faces) {
    for (int k = 0; k < 3; ++k) f[k] = read_raw<int32_t>(in);
  }
  for (int64_t l = 0; l < L; ++l) {
    const auto name_len = read_raw<uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto count = read_raw<uint32_t>(in);
    std::vector<int> chain(count);
    for (auto& idx : chain) idx = read_raw<int32_t>(in);
    model.canonical.labels.emplace(std::move(name), std::move(chain));
  }
  if (!in) throw std::runtime_error(path.string() + ": truncated model container");
  model.canonical.validate();
  return model;
}

}  // namespace meshreg

#include "meshreg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "meshreg/geometry.hpp"

namespace meshreg {
namespace {

void check_prob(double p, const char* name) {
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument(std::string(name) + " outside [0, 1]");
  }
}

void check_range(double lo, double hi, const char* name) {
  if (lo > hi) throw std::invalid_argument(std::string(name) + " range lo > hi");
}

int zhang_suen_pass(Image<uint8_t>& img, int phase) {
  // Neighborhood P2..P9 clockwise from north; a pixel is deleted when it
  // has 2..6 set neighbors, exactly one 0->1 transition around the ring,
  // and the phase-specific corner products vanish.
  const int w = img.width, h = img.height;
  auto px = [&](int x, int y) -> int {
    return img.in_bounds(x, y) ? (img.at(x, y) != 0) : 0;
  };
  std::vector<std::array<int, 2>> kill;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!px(x, y)) continue;
      const int p[8] = {px(x, y - 1),     px(x + 1, y - 1), px(x + 1, y),
                        px(x + 1, y + 1), px(x, y + 1),     px(x - 1, y + 1),
                        px(x - 1, y),     px(x - 1, y - 1)};
      int b = 0, a = 0;
      for (int k = 0; k < 8; ++k) {
        b += p[k];
        if (p[k] == 0 && p[(k + 1) % 8] == 1) ++a;
      }
      if (b < 2 || b > 6 || a != 1) continue;
      const bool cond = phase == 0 ? (p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0)
                                   : (p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0);
      if (cond) kill.push_back({x, y});
    }
  }
  for (const auto& q : kill) img.at(q[0], q[1]) = 0;
  return static_cast<int>(kill.size());
}

void zero_rect(MaskImage& img, int x0, int y0, int rw, int rh) {
  for (int y = y0; y < std::min(img.height, y0 + rh); ++y) {
    for (int x = x0; x < std::min(img.width, x0 + rw); ++x) {
      img.at(x, y) = 0;
    }
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  }
  return k;
}

// Separable blur with border renormalization, so outputs stay a convex
// combination of inputs.
void blur_inplace(std::vector<float>& data, int w, int h, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size()) / 2;
  std::vector<float> tmp(data.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0, wsum = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = x + i;
        if (xx < 0 || xx >= w) continue;
        acc += kernel[i + radius] * data[y * w + xx];
        wsum += kernel[i + radius];
      }
      tmp[y * w + x] = static_cast<float>(acc / wsum);
    }
  }
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      double acc = 0.0, wsum = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = y + i;
        if (yy < 0 || yy >= h) continue;
        acc += kernel[i + radius] * tmp[yy * w + x];
        wsum += kernel[i + radius];
      }
      data[y * w + x] = static_cast<float>(acc / wsum);
    }
  }
}

}  // namespace

void AugmentConfig::validate() const {
  check_prob(mask_jitter_prob, "mask_jitter_prob");
  check_prob(occluder_prob, "occluder_prob");
  check_prob(erase_prob, "erase_prob");
  check_prob(normalize_prob, "normalize_prob");
  check_prob(scale_prob, "scale_prob");
  if (contour_dilate_min < 0 || contour_dilate_min > contour_dilate_max) {
    throw std::invalid_argument("contour dilation range invalid");
  }
  if (contour_max_deletions < 0) {
    throw std::invalid_argument("negative deletion count");
  }
  check_range(contour_deletion_fraction, 1.0, "contour_deletion_fraction");
  if (mask_kernel_min < 2 || mask_kernel_min > mask_kernel_max) {
    throw std::invalid_argument("mask kernel range invalid");
  }
  if (occluder_count_min < 0 || occluder_count_min > occluder_count_max) {
    throw std::invalid_argument("occluder count range invalid");
  }
  check_range(occluder_length_min, occluder_length_max, "occluder_length");
  check_range(occluder_width_min, occluder_width_max, "occluder_width");
  if (erase_count_max < 0) throw std::invalid_argument("negative erase count");
  check_range(erase_ratio_min, erase_ratio_max, "erase_ratio");
  check_range(erase_aspect_min, erase_aspect_max, "erase_aspect");
  check_range(0.0, normalize_a_max, "normalize_a");
  check_range(normalize_b_min, 1.0, "normalize_b");
  check_range(scale_min, scale_max, "scale");
  check_range(shift_min, shift_max, "shift");
  check_range(noise_sigma_min, noise_sigma_max, "noise_sigma");
}

MaskImage skeletonize(const MaskImage& img) {
  MaskImage out = img;
  for (;;) {
    const int first = zhang_suen_pass(out, 0);
    const int second = zhang_suen_pass(out, 1);
    if (first + second == 0) break;
  }
  return out;
}

MaskImage dilate_cross2(const MaskImage& img, int iterations) {
  MaskImage cur = img;
  for (int it = 0; it < iterations; ++it) {
    MaskImage next = cur;
    for (int y = 0; y < cur.height; ++y) {
      for (int x = 0; x < cur.width; ++x) {
        if (cur.at(x, y) == 0) continue;
        if (x + 1 < cur.width) next.at(x + 1, y) = 255;
        if (y + 1 < cur.height) next.at(x, y + 1) = 255;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<std::array<int, 2>> elliptical_footprint(int k) {
  if (k < 1 || k % 2 == 0) throw std::invalid_argument("kernel size must be odd");
  const int r = (k - 1) / 2;
  std::vector<std::array<int, 2>> offsets;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= r * r) offsets.push_back({dx, dy});
    }
  }
  return offsets;
}

MaskImage morph_elliptical(const MaskImage& img, int k, bool dilate) {
  const auto offsets = elliptical_footprint(k);
  MaskImage out(img.width, img.height, 0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      bool any = false, all = true;
      for (const auto& o : offsets) {
        const int xx = x + o[0], yy = y + o[1];
        const bool set = img.in_bounds(xx, yy) && img.at(xx, yy) != 0;
        any = any || set;
        all = all && set;
      }
      out.at(x, y) = (dilate ? any : all) ? 255 : 0;
    }
  }
  return out;
}

ElasticField make_elastic_field(int width, int height, double sigma, double alpha,
                                Rng& rng) {
  ElasticField field;
  field.width = width;
  field.height = height;
  field.dx.resize(static_cast<size_t>(width) * height);
  field.dy.resize(field.dx.size());
  for (auto& v : field.dx) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (auto& v : field.dy) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  if (sigma > 0.0) {
    blur_inplace(field.dx, width, height, sigma);
    blur_inplace(field.dy, width, height, sigma);
  }
  for (auto& v : field.dx) v = static_cast<float>(v * alpha);
  for (auto& v : field.dy) v = static_cast<float>(v * alpha);
  return field;
}

MaskImage elastic_remap(const MaskImage& img, const ElasticField& field) {
  if (field.width != img.width || field.height != img.height) {
    throw std::invalid_argument("elastic field size mismatch");
  }
  MaskImage out(img.width, img.height, 0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const size_t i = static_cast<size_t>(y) * img.width + x;
      const int sx = static_cast<int>(std::lround(x + field.dx[i]));
      const int sy = static_cast<int>(std::lround(y + field.dy[i]));
      if (img.in_bounds(sx, sy)) out.at(x, y) = img.at(sx, sy);
    }
  }
  return out;
}

MaskImage augment_contour(const MaskImage& img, const AugmentConfig& cfg, Rng& rng) {
  MaskImage out = skeletonize(img);
  const int r = rng.uniform_int(cfg.contour_dilate_min, cfg.contour_dilate_max);
  out = dilate_cross2(out, r);

  const int deletions = rng.uniform_int(0, cfg.contour_max_deletions);
  const int rw = std::max(1, static_cast<int>(std::lround(
                                 cfg.contour_deletion_fraction * img.width)));
  const int rh = std::max(1, static_cast<int>(std::lround(
                                 cfg.contour_deletion_fraction * img.height)));
  for (int i = 0; i < deletions; ++i) {
    const int x0 = rng.uniform_int(0, std::max(0, img.width - rw));
    const int y0 = rng.uniform_int(0, std::max(0, img.height - rh));
    zero_rect(out, x0, y0, rw, rh);
  }

  if (cfg.elastic_alpha > 0.0) {
    const auto field = make_elastic_field(img.width, img.height, cfg.elastic_sigma,
                                          cfg.elastic_alpha, rng);
    out = elastic_remap(out, field);
  }
  return out;
}

MaskImage augment_mask(const MaskImage& img, const AugmentConfig& cfg, Rng& rng) {
  if (!rng.bernoulli(cfg.mask_jitter_prob)) return img;
  const bool dilate = rng.bernoulli(0.5);
  int k = rng.uniform_int(cfg.mask_kernel_min, cfg.mask_kernel_max);
  if (k % 2 == 0) ++k;
  return morph_elliptical(img, k, dilate);
}

DepthImage augment_depth(const DepthImage& img, const AugmentConfig& cfg, Rng& rng) {
  DepthImage out = img;
  const int w = out.width, h = out.height;

  if (rng.bernoulli(cfg.occluder_prob)) {
    const int n = rng.uniform_int(cfg.occluder_count_min, cfg.occluder_count_max);
    for (int i = 0; i < n; ++i) {
      const double cx = rng.uniform(0.0, w);
      const double cy = rng.uniform(0.0, h);
      const double len = rng.uniform(cfg.occluder_length_min, cfg.occluder_length_max);
      const double wid = rng.uniform(cfg.occluder_width_min, cfg.occluder_width_max);
      const double ang =
          deg2rad(rng.uniform(-cfg.occluder_angle_deg, cfg.occluder_angle_deg));
      const double c = std::cos(ang), s = std::sin(ang);
      const double reach = 0.5 * (len + wid);
      const int x0 = std::max(0, static_cast<int>(std::floor(cx - reach)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + reach)));
      const int y0 = std::max(0, static_cast<int>(std::floor(cy - reach)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + reach)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double u = (x - cx) * c + (y - cy) * s;
          const double v = -(x - cx) * s + (y - cy) * c;
          if (std::abs(u) <= len / 2 && std::abs(v) <= wid / 2) out.at(x, y) = 0.0f;
        }
      }
    }
  }

  if (rng.bernoulli(cfg.erase_prob)) {
    const int n = rng.uniform_int(0, cfg.erase_count_max);
    for (int i = 0; i < n; ++i) {
      const double ratio = rng.uniform(cfg.erase_ratio_min, cfg.erase_ratio_max);
      const double aspect = rng.uniform(cfg.erase_aspect_min, cfg.erase_aspect_max);
      const double area = ratio * w * h;
      int pw = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, w);
      int ph = std::clamp(static_cast<int>(std::lround(area / pw)), 1, h);
      const int x0 = rng.uniform_int(0, w - pw);
      const int y0 = rng.uniform_int(0, h - ph);
      for (int y = y0; y < y0 + ph; ++y) {
        for (int x = x0; x < x0 + pw; ++x) out.at(x, y) = 0.0f;
      }
    }
  }

  if (rng.bernoulli(cfg.normalize_prob)) {
    const double a = rng.uniform(0.0, cfg.normalize_a_max);
    const double b = rng.uniform(cfg.normalize_b_min, 1.0);
    float lo = std::numeric_limits<float>::max(), hi = 0.0f;
    for (float v : out.pixels) {
      if (v > 0.0f) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (hi > 0.0f) {
      for (float& v : out.pixels) {
        if (v <= 0.0f) continue;  // invalid pixels stay zero
        const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
        v = static_cast<float>((a + (b - a) * t) * 255.0);
      }
    }
  }

  if (rng.bernoulli(cfg.scale_prob)) {
    const double s = rng.uniform(cfg.scale_min, cfg.scale_max);
    const double shift = rng.uniform(cfg.shift_min, cfg.shift_max);
    const double noise = rng.uniform(cfg.noise_sigma_min, cfg.noise_sigma_max) * 255.0;
    for (float& v : out.pixels) {
      if (v <= 0.0f) continue;
      v = static_cast<float>(
          std::max(0.0, s * v + shift + noise * rng.gaussian()));
    }
  }

  return out;
}

}  // namespace meshreg

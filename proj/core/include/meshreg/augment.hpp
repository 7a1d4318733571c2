// Stochastic augmentation of contour, mask, and depth channels for
// synthetic dataset generation.
#pragma once

#include "meshreg/image.hpp"
#include "meshreg/rng.hpp"

#include <array>
#include <vector>

namespace meshreg {

struct AugmentConfig {
  // Contour: skeletonize, dilate with a 2x2 cross kernel, delete up to
  // `contour_max_deletions` rectangles of `contour_deletion_fraction` of
  // each image dimension, then elastic-warp. Setting max deletions to 0 and
  // elastic_alpha to 0 isolates the dilated skeleton.
  int contour_dilate_min = 1;
  int contour_dilate_max = 3;
  int contour_max_deletions = 3;
  double contour_deletion_fraction = 0.2;
  double elastic_sigma = 4.0;  // px, Gaussian smoothing of the random field
  double elastic_alpha = 10.0; // px, displacement scale; 0 disables

  // Mask: morphological jitter (erode or dilate once, elliptical element of
  // size k x k; even k is bumped to k + 1).
  double mask_jitter_prob = 0.5;
  int mask_kernel_min = 2;
  int mask_kernel_max = 6;

  // Depth, applied in order to valid (> 0) pixels: rotated-rectangle
  // occluders, random erasing, affine normalization to [0, 255], scale
  // perturbation with additive Gaussian noise.
  double occluder_prob = 0.4;
  int occluder_count_min = 1;
  int occluder_count_max = 2;
  double occluder_length_min = 100;  // px
  double occluder_length_max = 400;
  double occluder_width_min = 8;
  double occluder_width_max = 25;
  double occluder_angle_deg = 45;  // sampled in [-angle, angle]

  double erase_prob = 0.4;
  int erase_count_max = 2;  // count sampled in {0..max}
  double erase_ratio_min = 0.05;  // patch area as a fraction of the image
  double erase_ratio_max = 0.25;
  double erase_aspect_min = 0.5;
  double erase_aspect_max = 2.0;

  double normalize_prob = 0.5;
  double normalize_a_max = 0.2;  // low anchor in [0, a_max]
  double normalize_b_min = 0.8;  // high anchor in [b_min, 1]

  double scale_prob = 0.6;
  double scale_min = 0.7;
  double scale_max = 1.3;
  double shift_min = -30;
  double shift_max = 30;
  double noise_sigma_min = 0.01;  // fraction of 255
  double noise_sigma_max = 0.05;

  void validate() const;
};

// Zhang-Suen thinning to an 8-connected 1-px skeleton. Iterates to a fixed
// point, so applying it twice changes nothing.
MaskImage skeletonize(const MaskImage& img);

// Dilation with the 2x2 cross element {(0,0),(1,0),(0,1)}.
MaskImage dilate_cross2(const MaskImage& img, int iterations);

// Offsets of the k x k elliptical element (Euclidean disk of radius
// (k-1)/2); k must be odd.
std::vector<std::array<int, 2>> elliptical_footprint(int k);

MaskImage morph_elliptical(const MaskImage& img, int k, bool dilate);

// Smoothed random displacement field: per-pixel U(-1,1) components blurred
// with a Gaussian of `sigma`, scaled by `alpha`. Magnitudes stay below
// alpha because smoothing is a convex combination.
struct ElasticField {
  int width = 0, height = 0;
  std::vector<float> dx, dy;  // px
};

ElasticField make_elastic_field(int width, int height, double sigma, double alpha,
                                Rng& rng);

// Nearest-neighbor remap keeping channels binary; out-of-image samples
// read as 0.
MaskImage elastic_remap(const MaskImage& img, const ElasticField& field);

MaskImage augment_contour(const MaskImage& img, const AugmentConfig& cfg, Rng& rng);
MaskImage augment_mask(const MaskImage& img, const AugmentConfig& cfg, Rng& rng);
DepthImage augment_depth(const DepthImage& img, const AugmentConfig& cfg, Rng& rng);

}  // namespace meshreg

// PNG serialization for masks (8-bit gray) and depth (16-bit gray).
#pragma once

#include <filesystem>

#include "meshreg/image.hpp"

namespace meshreg {

// Depth PNGs store round(mm / kDepthUnitMm) per pixel, so one unit is
// 0.1 mm and the 16-bit range covers about 6.5 m. Zero stays zero (invalid).
inline constexpr double kDepthUnitMm = 0.1;

void write_mask_png(const MaskImage& mask, const std::filesystem::path& path);
MaskImage read_mask_png(const std::filesystem::path& path);

void write_depth_png(const DepthImage& depth, const std::filesystem::path& path);
DepthImage read_depth_png(const std::filesystem::path& path);

}  // namespace meshreg

#include "meshreg/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace meshreg {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Writes one gray channel at the requested bit depth; rows are provided
// big-endian for 16-bit as PNG requires.
void write_gray(const std::filesystem::path& path, int width, int height,
                int bit_depth, const std::vector<std::vector<png_byte>>& rows) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng write failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (const auto& row : rows) {
    png_write_row(png, const_cast<png_bytep>(row.data()));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct GrayPng {
  int width = 0, height = 0, bit_depth = 0;
  std::vector<std::vector<png_byte>> rows;
};

GrayPng read_gray(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                           nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng read failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Collapse palette/rgb/alpha variants down to gray.
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  }
  if (png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  GrayPng out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  const size_t row_bytes = png_get_rowbytes(png, info);
  out.rows.assign(out.height, std::vector<png_byte>(row_bytes));
  for (auto& row : out.rows) png_read_row(png, row.data(), nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

void write_mask_png(const MaskImage& mask, const std::filesystem::path& path) {
  std::vector<std::vector<png_byte>> rows(mask.height,
                                          std::vector<png_byte>(mask.width));
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) rows[y][x] = mask.at(x, y);
  }
  write_gray(path, mask.width, mask.height, 8, rows);
}

MaskImage read_mask_png(const std::filesystem::path& path) {
  const GrayPng raw = read_gray(path);
  MaskImage mask(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const png_byte v =
          raw.bit_depth == 16 ? raw.rows[y][2 * x] : raw.rows[y][x];
      mask.at(x, y) = v >= 128 ? 255 : 0;
    }
  }
  return mask;
}

void write_depth_png(const DepthImage& depth, const std::filesystem::path& path) {
  std::vector<std::vector<png_byte>> rows(depth.height,
                                          std::vector<png_byte>(2 * depth.width));
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const double units = std::round(depth.at(x, y) / kDepthUnitMm);
      const auto v = static_cast<uint16_t>(std::clamp(units, 0.0, 65535.0));
      rows[y][2 * x] = static_cast<png_byte>(v >> 8);
      rows[y][2 * x + 1] = static_cast<png_byte>(v & 0xff);
    }
  }
  write_gray(path, depth.width, depth.height, 16, rows);
}

DepthImage read_depth_png(const std::filesystem::path& path) {
  const GrayPng raw = read_gray(path);
  if (raw.bit_depth != 16) {
    throw std::runtime_error(path.string() + ": expected 16-bit depth PNG");
  }
  DepthImage depth(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const uint16_t v = static_cast<uint16_t>(raw.rows[y][2 * x] << 8) |
                         raw.rows[y][2 * x + 1];
      depth.at(x, y) = static_cast<float>(v * kDepthUnitMm);
    }
  }
  return depth;
}

}  // namespace meshreg

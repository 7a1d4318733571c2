// Row-major single-channel images.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace meshreg {

template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> pixels;  // row-major, y * width + x

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h) {
    if (w < 0 || h < 0) throw std::invalid_argument("negative image size");
    pixels.assign(static_cast<size_t>(w) * h, fill);
  }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  T& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  const T& at(int x, int y) const {
    return pixels[static_cast<size_t>(y) * width + x];
  }
  bool empty() const { return pixels.empty(); }

  friend bool operator==(const Image&, const Image&) = default;
};

// Binary masks hold 0 or 255. Depth is in millimeters, 0 = invalid.
using MaskImage = Image<uint8_t>;
using DepthImage = Image<float>;

inline int count_nonzero(const MaskImage& m) {
  int n = 0;
  for (auto p : m.pixels) n += p != 0;
  return n;
}

}  // namespace meshreg

// FNV-1a content hashing for golden-image tests and corpus fingerprints.
#pragma once

#include <cstddef>
#include <cstdint>

#include "meshreg/image.hpp"

namespace meshreg {

inline uint64_t fnv1a64(const void* data, size_t len,
                        uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

template <typename T>
uint64_t image_hash(const Image<T>& img) {
  uint64_t h = fnv1a64(&img.width, sizeof(img.width));
  h = fnv1a64(&img.height, sizeof(img.height), h);
  return fnv1a64(img.pixels.data(), img.pixels.size() * sizeof(T), h);
}

}  // namespace meshreg

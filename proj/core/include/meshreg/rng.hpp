// Deterministic random streams. Distribution code is hand-rolled on top of
// mt19937_64 so sampled sequences are identical across standard libraries,
// which the seeded golden tests rely on.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace meshreg {

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive on both ends.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(engine_() % static_cast<uint64_t>(hi - lo + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Independent per-frame stream: frames are reproducible in isolation no
// matter how many frames ran before them.
inline uint64_t frame_seed(uint64_t global_seed, uint64_t frame_index) {
  return mix64(global_seed ^ mix64(frame_index));
}

inline Rng frame_rng(uint64_t global_seed, uint64_t frame_index) {
  return Rng(frame_seed(global_seed, frame_index));
}

}  // namespace meshreg

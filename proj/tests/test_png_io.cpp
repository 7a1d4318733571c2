#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "meshreg/png_io.hpp"
#include "meshreg/rng.hpp"
#include "support.hpp"

using namespace meshreg;

TEST_CASE("binary masks round trip") {
  const auto dir = testing::temp_dir("png_mask");
  MaskImage mask(33, 21, 0);
  Rng rng(1);
  for (auto& p : mask.pixels) p = rng.bernoulli(0.4) ? 255 : 0;
  write_mask_png(mask, dir / "m.png");
  const MaskImage back = read_mask_png(dir / "m.png");
  CHECK(back == mask);
}

TEST_CASE("mask reads threshold gray values at 128") {
  const auto dir = testing::temp_dir("png_threshold");
  MaskImage gray(4, 1, 0);
  gray.pixels = {0, 42, 128, 200};
  write_mask_png(gray, dir / "g.png");
  const MaskImage back = read_mask_png(dir / "g.png");
  CHECK(back.pixels == std::vector<uint8_t>{0, 0, 255, 255});
}

TEST_CASE("depth stores 0.1 mm per unit in 16 bits") {
  CHECK(kDepthUnitMm == 0.1);
  const auto dir = testing::temp_dir("png_depth");
  DepthImage depth(5, 1, 0.0f);
  depth.pixels = {0.0f, 0.1f, 123.4f, 6553.5f, 250.07f};
  write_depth_png(depth, dir / "d.png");
  const DepthImage back = read_depth_png(dir / "d.png");
  REQUIRE(back.width == 5);
  CHECK(back.pixels[0] == 0.0f);
  CHECK(back.pixels[1] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(back.pixels[2] == doctest::Approx(123.4).epsilon(1e-6));
  CHECK(back.pixels[3] == doctest::Approx(6553.5).epsilon(1e-6));
  // Quantization rounds to the nearest 0.1 mm.
  CHECK(back.pixels[4] == doctest::Approx(250.1).epsilon(1e-6));
}

TEST_CASE("depth outside the representable range clamps") {
  const auto dir = testing::temp_dir("png_depth_clamp");
  DepthImage depth(2, 1, 0.0f);
  depth.pixels = {7000.0f, -3.0f};
  write_depth_png(depth, dir / "d.png");
  const DepthImage back = read_depth_png(dir / "d.png");
  CHECK(back.pixels[0] == doctest::Approx(6553.5));
  CHECK(back.pixels[1] == 0.0f);  // negative depth is not a depth
}

TEST_CASE("depth reader insists on 16-bit input") {
  const auto dir = testing::temp_dir("png_depth_8bit");
  write_mask_png(MaskImage(4, 4, 255), dir / "mask.png");
  CHECK_THROWS_WITH_AS(read_depth_png(dir / "mask.png"),
                       doctest::Contains("16-bit"), std::runtime_error);
}

TEST_CASE("random depth images survive the quantized round trip") {
  const auto dir = testing::temp_dir("png_depth_random");
  Rng rng(9);
  DepthImage depth(64, 48, 0.0f);
  for (auto& p : depth.pixels) {
    p = rng.bernoulli(0.7) ? static_cast<float>(rng.uniform(50.0, 500.0)) : 0.0f;
  }
  write_depth_png(depth, dir / "d.png");
  const DepthImage back = read_depth_png(dir / "d.png");
  for (size_t i = 0; i < depth.pixels.size(); ++i) {
    CHECK(std::abs(back.pixels[i] - depth.pixels[i]) <= 0.05f + 1e-4f);
    CHECK((back.pixels[i] == 0.0f) == (depth.pixels[i] == 0.0f));
  }
}

TEST_CASE("missing files raise errors") {
  const auto dir = testing::temp_dir("png_missing");
  CHECK_THROWS_AS(read_mask_png(dir / "nope.png"), std::runtime_error);
  CHECK_THROWS_AS(read_depth_png(dir / "nope.png"), std::runtime_error);
}

TEST_CASE("non-PNG bytes are rejected") {
  const auto dir = testing::temp_dir("png_garbage");
  {
    std::ofstream out(dir / "junk.png", std::ios::binary);
    out << "definitely not a png";
  }
  CHECK_THROWS_AS(read_mask_png(dir / "junk.png"), std::runtime_error);
}

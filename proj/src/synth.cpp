#include "fsnn/synth.hpp"

#include <cmath>

#include "fsnn/rng.hpp"

namespace fsnn {

namespace {

// 5-wide x 7-tall digit glyphs, one bit per pixel.
const uint8_t kGlyphs[10][7] = {
    {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110},  // 0
    {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110},  // 1
    {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111},  // 2
    {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110},  // 3
    {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010},  // 4
    {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110},  // 5
    {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110},  // 6
    {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000},  // 7
    {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110},  // 8
    {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100},  // 9
};

float glyph_at(int digit, float gx, float gy) {
  // bilinear sample of the binary glyph; outside -> 0
  const int x0 = static_cast<int>(std::floor(gx));
  const int y0 = static_cast<int>(std::floor(gy));
  const float fx = gx - static_cast<float>(x0);
  const float fy = gy - static_cast<float>(y0);
  auto px = [&](int x, int y) -> float {
    if (x < 0 || x >= 5 || y < 0 || y >= 7) return 0.0f;
    return (kGlyphs[digit][y] >> (4 - x)) & 1 ? 1.0f : 0.0f;
  };
  const float a = px(x0, y0) * (1 - fx) + px(x0 + 1, y0) * fx;
  const float b = px(x0, y0 + 1) * (1 - fx) + px(x0 + 1, y0 + 1) * fx;
  return a * (1 - fy) + b * fy;
}

}  // namespace

Dataset synth_digits(uint32_t n, uint64_t seed, const std::string& split) {
  Rng rng(seed);
  Dataset ds;
  ds.images = Tensor({n, 1, 28, 28});
  ds.labels.resize(n);
  ds.class_count = 10;
  ds.split = split;

  for (uint32_t i = 0; i < n; ++i) {
    const int digit = static_cast<int>(rng.below(10));
    ds.labels[i] = static_cast<uint32_t>(digit);

    const float theta = static_cast<float>(rng.uniform(-0.35, 0.35));
    const float scale = static_cast<float>(rng.uniform(1.9, 3.4));   // glyph px -> image px
    const float shear = static_cast<float>(rng.uniform(-0.30, 0.30));
    const float tx = static_cast<float>(rng.uniform(-3.5, 3.5));
    const float ty = static_cast<float>(rng.uniform(-3.5, 3.5));
    const float intensity = static_cast<float>(rng.uniform(0.55, 1.0));
    const float noise = 0.10f;

    const float c = std::cos(theta), s = std::sin(theta);
    float* img = ds.images.data.data() + static_cast<size_t>(i) * 28 * 28;
    for (int y = 0; y < 28; ++y) {
      for (int x = 0; x < 28; ++x) {
        // image -> glyph space, inverse affine around the image center
        const float dx = static_cast<float>(x) - 13.5f - tx;
        const float dy = static_cast<float>(y) - 13.5f - ty;
        const float rx = (c * dx + s * dy) / scale;
        const float ry = (-s * dx + c * dy) / scale;
        const float gx = rx - shear * ry + 2.0f;
        const float gy = ry + 3.0f;
        float v = glyph_at(digit, gx, gy) * intensity;
        v += rng.normal_float(noise);
        img[y * 28 + x] = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
      }
    }
  }
  ds.validate();
  return ds;
}

}  // namespace fsnn

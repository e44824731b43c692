#pragma once

// Deterministic synthetic digit data in MNIST layout (28x28 grayscale,
// 10 classes, pixels in [0,255]). Each sample renders a 5x7 glyph under a
// seeded random affine warp (shift/scale/rotation/shear), bilinear sampling,
// intensity jitter and additive Gaussian noise. The repository ships no real
// dataset; this generator stands in for it at desk scale.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "pqsv/rng.hpp"
#include "pqsv/tensor.hpp"

namespace pqsv {

namespace detail {

// classic 5x7 digit font, one row per scanline, LSB = leftmost column
inline const std::uint8_t kDigitFont[10][7] = {
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

inline double glyph_at(int digit, int col, int row) {
  if (col < 0 || col >= 5 || row < 0 || row >= 7) return 0.0;
  return (kDigitFont[digit][row] >> (4 - col)) & 1 ? 1.0 : 0.0;
}

// bilinear sample of the glyph grid at fractional coordinates
inline double glyph_sample(int digit, double u, double v) {
  const double fu = std::floor(u), fv = std::floor(v);
  const int cu = static_cast<int>(fu), cv = static_cast<int>(fv);
  const double du = u - fu, dv = v - fv;
  return glyph_at(digit, cu, cv) * (1.0 - du) * (1.0 - dv) +
         glyph_at(digit, cu + 1, cv) * du * (1.0 - dv) +
         glyph_at(digit, cu, cv + 1) * (1.0 - du) * dv +
         glyph_at(digit, cu + 1, cv + 1) * du * dv;
}

}  // namespace detail

inline constexpr std::size_t kSynthImageSide = 28;

// One 28x28 digit image; pixel values are integers in [0,255] stored as
// doubles, so IDX round trips are lossless.
inline Tensor synth_digit_image(int digit, Rng& rng) {
  const double angle = rng.uniform(-0.22, 0.22);
  const double scale = rng.uniform(2.2, 3.1);   // glyph cell -> output pixels
  const double shear = rng.uniform(-0.15, 0.15);
  const double cx = 14.0 + rng.uniform(-2.5, 2.5);
  const double cy = 14.0 + rng.uniform(-2.5, 2.5);
  const double fg = rng.uniform(170.0, 255.0);
  const double noise_sigma = rng.uniform(12.0, 24.0);

  const double ca = std::cos(angle), sa = std::sin(angle);
  Tensor img = Tensor::zeros({kSynthImageSide, kSynthImageSide});
  for (std::size_t r = 0; r < kSynthImageSide; ++r) {
    for (std::size_t c = 0; c < kSynthImageSide; ++c) {
      // map output pixel back into glyph coordinates (glyph center 2.0, 3.0)
      const double dx = (static_cast<double>(c) - cx) / scale;
      const double dy = (static_cast<double>(r) - cy) / scale;
      const double gx = ca * dx + sa * dy;
      const double gy = -sa * dx + ca * dy + shear * dx;
      const double u = gx + 2.0;
      const double v = gy + 3.0;
      double val = fg * detail::glyph_sample(digit, u, v);
      val += noise_sigma * rng.normal();
      val = std::floor(val + 0.5);
      if (val < 0.0) val = 0.0;
      if (val > 255.0) val = 255.0;
      img.values[r * kSynthImageSide + c] = val;
    }
  }
  return img;
}

inline void synth_digits(std::size_t count, std::uint64_t seed, std::vector<Tensor>& images,
                         std::vector<int>& labels) {
  Rng rng(seed);
  images.clear();
  labels.clear();
  images.reserve(count);
  labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int digit = static_cast<int>(rng.below(10));
    labels.push_back(digit);
    images.push_back(synth_digit_image(digit, rng));
  }
}

}  // namespace pqsv

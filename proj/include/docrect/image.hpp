#pragma once

#include "docrect/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace docrect {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB raster, rows top to bottom. Pixel (x, y) has its centre at the
/// continuous coordinate (x, y).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, Rgb fill = {0, 0, 0});

  bool empty() const { return width == 0 || height == 0; }
  Rgb at(int x, int y) const {
    const auto* p = &data[3 * (static_cast<size_t>(y) * width + x)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    auto* p = &data[3 * (static_cast<size_t>(y) * width + x)];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
};

/// Bilinear sample at a continuous position; false when outside the pixel
/// centres' hull.
bool sample_bilinear(const Image& img, const Vec2& p, std::array<double, 3>& out);

/// PNG (by signature) or binary PPM.
Image load_image(const std::filesystem::path& path);
/// Format from the extension: .png or .ppm.
void save_image(const std::filesystem::path& path, const Image& img);

}  // namespace docrect

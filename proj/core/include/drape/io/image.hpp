#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace drape {

/// 16-bit RGBA PNG, rows top to bottom, 4 samples per pixel.
void write_png_rgba16(const std::string& path, int width, int height,
                      const std::vector<std::uint16_t>& rgba);

/// Single-channel portable float map ("Pf"), rows given bottom to top as PFM expects.
void write_pfm(const std::string& path, int width, int height, const std::vector<float>& values);

/// 8-bit grayscale PNG heat map of `values` (row 0 at the bottom), scaled to
/// the maximum value.
void write_heatmap_png(const std::string& path, int width, int height, const std::vector<double>& values);

}  // namespace drape

#include "drape/io/image.hpp"

#include "drape/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace drape {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

void write_png(const std::string& path, int width, int height, int color_type, int bit_depth,
               const std::vector<png_bytep>& rows) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoFailure, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoFailure, "libpng failed writing " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // host little-endian -> PNG big-endian
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png_rgba16(const std::string& path, int width, int height,
                      const std::vector<std::uint16_t>& rgba) {
  std::vector<std::uint16_t> buffer = rgba;
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r)
    rows[r] = reinterpret_cast<png_bytep>(buffer.data() + static_cast<std::size_t>(r) * width * 4);
  write_png(path, width, height, PNG_COLOR_TYPE_RGBA, 16, rows);
}

void write_heatmap_png(const std::string& path, int width, int height, const std::vector<double>& values) {
  const double peak = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(width) * height, 0);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const double v = peak > 0.0 ? values[static_cast<std::size_t>(r) * width + c] / peak : 0.0;
      gray[static_cast<std::size_t>(height - 1 - r) * width + c] =
          static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r) rows[r] = gray.data() + static_cast<std::size_t>(r) * width;
  write_png(path, width, height, PNG_COLOR_TYPE_GRAY, 8, rows);
}

void write_pfm(const std::string& path, int width, int height, const std::vector<float>& values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  os << "Pf\n" << width << " " << height << "\n-1.0\n";
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!os) throw Error(ErrorCode::IoFailure, "failed writing " + path);
}

}  // namespace drape

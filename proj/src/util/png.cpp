#include "feddig/util/png.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "feddig/error.hpp"

namespace feddig::util {

void write_png_grid(const std::filesystem::path& path, const nn::Tensor& images, int columns) {
  require(images.rank() == 4 && images.dim(0) > 0, ErrorCategory::kContract, "grid needs a non-empty NCHW batch");
  const int n = images.dim(0);
  const int c = images.dim(1);
  const int h = images.dim(2);
  const int w = images.dim(3);
  require(c == 1 || c == 3, ErrorCategory::kContract, "grid images need 1 or 3 channels");
  columns = std::max(1, std::min(columns, n));
  const int rows = (n + columns - 1) / columns;
  const int width = columns * (w + 1) + 1;
  const int height = rows * (h + 1) + 1;
  std::vector<png_byte> pixels(static_cast<std::size_t>(width) * height * 3, 64);
  for (int i = 0; i < n; ++i) {
    const int ox = 1 + (i % columns) * (w + 1);
    const int oy = 1 + (i / columns) * (h + 1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          const int src_ch = c == 1 ? 0 : ch;
          const double v = images[((static_cast<std::size_t>(i) * c + src_ch) * h + y) * w + x];
          pixels[(static_cast<std::size_t>(oy + y) * width + ox + x) * 3 + ch] =
              static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        }
      }
    }
  }

  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  require(file != nullptr, ErrorCategory::kIo, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  require(png && info, ErrorCategory::kIo, "libpng initialization failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCategory::kIo, "libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * width * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace feddig::util

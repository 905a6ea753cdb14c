#include "pnpmri_cli/png.hpp"

#include "pnpmri_cli/config.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace pnpmri::cli {

void write_png(const std::string &path, const Image &x, double lo, double hi) {
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<png_byte> pixels(x.rows() * x.cols());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double t = std::clamp((x[i].real() - lo) / span, 0.0, 1.0);
    pixels[i] = static_cast<png_byte>(std::lround(255.0 * t));
  }

  std::unique_ptr<FILE, int (*)(FILE *)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot open '" + path + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(x.cols()), static_cast<png_uint_32>(x.rows()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < x.rows(); ++r) png_write_row(png, pixels.data() + r * x.cols());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

} // namespace pnpmri::cli

#pragma once

#include <pnpmri/types.hpp>

#include <string>

namespace pnpmri::cli {

/// 8-bit grayscale PNG of the real part of `x`, mapping [lo, hi] to [0, 255]
/// with clamping.
void write_png(const std::string &path, const Image &x, double lo, double hi);

} // namespace pnpmri::cli

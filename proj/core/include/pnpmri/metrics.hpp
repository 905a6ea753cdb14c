#pragma once

#include "pnpmri/types.hpp"

#include <optional>
#include <span>

namespace pnpmri {

/// How the dynamic range MAX / L is chosen.
enum class DynamicRange {
  Reference, ///< max over the reference image
  PairMax,   ///< max over both images; makes SSIM symmetric
};

struct MetricOptions {
  /// Per-pixel flags; metrics are computed over flagged pixels only. Empty means all pixels.
  std::span<const std::uint8_t> support{};
  DynamicRange range = DynamicRange::Reference;
};

struct PsnrResult {
  double db = 0.0;
  /// Zero MSE; db is capped at kPsnrCap.
  bool identical = false;
};

inline constexpr double kPsnrCap = 300.0;

/// 10 log10(MAX^2 / MSE) on the real parts of two magnitude images.
PsnrResult psnr(const Image &reference, const Image &test, const MetricOptions &opts = {});

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03. Windows are kept inside the image; for images smaller than the
/// window the radius shrinks to fit.
double ssim(const Image &reference, const Image &test, const MetricOptions &opts = {});

} // namespace pnpmri

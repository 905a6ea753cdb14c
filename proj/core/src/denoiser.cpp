#include "pnpmri/denoiser.hpp"

#include "pnpmri/error.hpp"

#include <algorithm>
#include <cmath>

namespace pnpmri {

GaussianDenoiser::GaussianDenoiser(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0)) throw Error("gaussian_denoiser: sigma must be positive");
  const auto radius = static_cast<long>(std::ceil(3.0 * sigma));
  double sum = 0.0;
  for (long k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    taps_.push_back(v);
    sum += v;
  }
  for (auto &t : taps_) t /= sum;
}

TwoChannelTensor GaussianDenoiser::apply(const TwoChannelTensor &t) const {
  const long radius = static_cast<long>(taps_.size() / 2);
  const std::size_t rows = t.rows, cols = t.cols;
  auto blur = [&](const std::vector<double> &in) {
    std::vector<double> tmp(in.size(), 0.0), out(in.size(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          acc += taps_[k + radius] * in[r * cols + nn::reflect_index(static_cast<long>(c) + k, cols)];
        }
        tmp[r * cols + c] = acc;
      }
    }
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          acc += taps_[k + radius] * tmp[nn::reflect_index(static_cast<long>(r) + k, rows) * cols + c];
        }
        out[r * cols + c] = acc;
      }
    }
    return out;
  };
  return TwoChannelTensor(rows, cols, blur(t.channel0), blur(t.channel1));
}

std::unique_ptr<Denoiser> gaussian_denoiser(double sigma) { return std::make_unique<GaussianDenoiser>(sigma); }

CnnDenoiser::CnnDenoiser(CnnArchitecture arch, CnnWeights weights) : arch_(arch), weights_(std::move(weights)) {
  check_weights(weights_, arch_);
}

TwoChannelTensor CnnDenoiser::apply(const TwoChannelTensor &t) const { return cnn_forward(weights_, arch_, t); }

Image denoise_complex(const Denoiser &den, const Image &x) {
  double peak = 0.0;
  for (const auto &v : x.values()) peak = std::max(peak, std::abs(v));
  const double s = std::max(peak, 1e-12);
  const Image normalized = scaled(x, 1.0 / s);
  const TwoChannelTensor out = den.apply(image_to_channels(normalized));
  if (out.rows != x.rows() || out.cols != x.cols()) {
    throw DimensionMismatch("denoiser '" + den.name() + "' changed the image size");
  }
  return scaled(channels_to_image(out), s);
}

} // namespace pnpmri

#pragma once

#include "pnpmri/nn_layers.hpp"
#include "pnpmri/types.hpp"

#include <cstdint>
#include <vector>

namespace pnpmri {

/// U-shaped encoder-decoder with skip connections.
///
/// Each of `num_levels` encoder levels applies `convs_per_level` conv+ReLU
/// blocks at `base_filters * 2^level` channels, followed by 2x2 average
/// pooling on all but the deepest level. Each decoder level upsamples
/// (nearest neighbour), applies conv+ReLU, concatenates the encoder skip and
/// applies `convs_per_level` conv+ReLU blocks. A linear conv head maps back to
/// two channels; with `residual` the network input is added to the head output.
struct CnnArchitecture {
  std::size_t num_levels = 2;
  std::size_t base_filters = 16;
  std::size_t kernel_size = 3;
  std::size_t convs_per_level = 2;
  bool residual = false;

  static constexpr std::size_t kChannels = 2;

  void validate() const;
  /// Spatial sizes must be multiples of this for the pooling path.
  std::size_t size_multiple() const { return std::size_t{1} << (num_levels - 1); }
  bool operator==(const CnnArchitecture &) const = default;
};

/// Convolution layers in declaration order: encoder levels top to bottom,
/// decoder levels bottom to top (up-conv first), then the head.
struct CnnWeights {
  std::vector<nn::ConvLayer> layers;

  std::size_t parameter_count() const;
  bool operator==(const CnnWeights &) const = default;
};

/// Zero weights shaped for `arch`.
CnnWeights make_zero_weights(const CnnArchitecture &arch);
/// He-normal kernels, zero biases; deterministic in `seed`.
CnnWeights make_initial_weights(const CnnArchitecture &arch, std::uint64_t seed);
/// Throws DimensionMismatch when layer shapes disagree with `arch`.
void check_weights(const CnnWeights &w, const CnnArchitecture &arch);

nn::Tensor3 to_tensor(const TwoChannelTensor &t);
TwoChannelTensor to_two_channel(const nn::Tensor3 &t);

/// Forward pass; inputs whose size is not a multiple of size_multiple() are
/// reflection-padded at the bottom/right and the output is cropped back.
TwoChannelTensor cnn_forward(const CnnWeights &w, const CnnArchitecture &arch, const TwoChannelTensor &t);

/// Mean over both channels and all pixels of the squared difference.
double mse_loss(const TwoChannelTensor &pred, const TwoChannelTensor &target);
/// d mse_loss / d pred.
TwoChannelTensor mse_loss_gradient(const TwoChannelTensor &pred, const TwoChannelTensor &target);

/// Reverse-mode weight gradients for an upstream gradient dL/d(output).
/// The input size must be a multiple of size_multiple().
CnnWeights cnn_backward(const CnnWeights &w, const CnnArchitecture &arch, const TwoChannelTensor &t,
                        const TwoChannelTensor &upstream);

/// mse_loss(cnn_forward(w, x), y) and its weight gradient in one pass.
double loss_and_gradient(const CnnWeights &w, const CnnArchitecture &arch, const TwoChannelTensor &x,
                         const TwoChannelTensor &y, CnnWeights &grad);

} // namespace pnpmri

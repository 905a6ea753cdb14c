#pragma once

#include <cstddef>
#include <vector>

namespace pnpmri::nn {

/// Dense (channels, rows, cols) real tensor.
struct Tensor3 {
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t c, std::size_t r, std::size_t w) : channels(c), rows(r), cols(w), data(c * r * w, 0.0) {}

  double &at(std::size_t c, std::size_t r, std::size_t w) { return data[(c * rows + r) * cols + w]; }
  double at(std::size_t c, std::size_t r, std::size_t w) const { return data[(c * rows + r) * cols + w]; }
  double *plane(std::size_t c) { return data.data() + c * rows * cols; }
  const double *plane(std::size_t c) const { return data.data() + c * rows * cols; }
  bool same_shape(const Tensor3 &o) const { return channels == o.channels && rows == o.rows && cols == o.cols; }
};

/// 2-D convolution (cross-correlation) with odd square kernel and reflection
/// padding. weight layout: [out][in][ky][kx].
struct ConvLayer {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  std::vector<double> weight;
  std::vector<double> bias;

  ConvLayer() = default;
  ConvLayer(std::size_t in, std::size_t out, std::size_t k)
    : in_channels(in), out_channels(out), kernel(k), weight(in * out * k * k, 0.0), bias(out, 0.0) {}

  double &w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
    return weight[((o * in_channels + i) * kernel + ky) * kernel + kx];
  }
  double w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weight[((o * in_channels + i) * kernel + ky) * kernel + kx];
  }
  bool operator==(const ConvLayer &) const = default;
};

/// Mirror index without edge repeat: -1 -> 1, n -> n-2.
std::size_t reflect_index(long i, std::size_t n);

Tensor3 reflect_pad(const Tensor3 &x, std::size_t pad);
/// Adjoint of reflect_pad: folds padded-domain gradients back onto the source.
Tensor3 reflect_pad_backward(const Tensor3 &g_padded, std::size_t rows, std::size_t cols, std::size_t pad);

/// Convolution of an already padded input; output has the unpadded size.
Tensor3 conv_forward_padded(const ConvLayer &layer, const Tensor3 &padded);
Tensor3 conv_forward(const ConvLayer &layer, const Tensor3 &x);

struct ConvGrad {
  std::vector<double> weight;
  std::vector<double> bias;
};

/// Accumulates dL/dW, dL/db into `grad` and returns dL/dx for the unpadded input.
Tensor3 conv_backward(const ConvLayer &layer, const Tensor3 &padded_input, const Tensor3 &g_out, ConvGrad &grad);

void relu_inplace(Tensor3 &x);
/// Masks `g` where the ReLU output was not positive.
void relu_backward_inplace(const Tensor3 &relu_output, Tensor3 &g);

/// 2x2 average pooling; rows and cols must be even.
Tensor3 avg_pool2(const Tensor3 &x);
Tensor3 avg_pool2_backward(const Tensor3 &g);

/// Nearest-neighbour 2x upsampling.
Tensor3 upsample2(const Tensor3 &x);
Tensor3 upsample2_backward(const Tensor3 &g);

/// Channel concatenation [a; b].
Tensor3 concat(const Tensor3 &a, const Tensor3 &b);
/// Splits a gradient for concat(a, b) into the part for a (first a_channels) and for b.
void concat_backward(const Tensor3 &g, std::size_t a_channels, Tensor3 &ga, Tensor3 &gb);

} // namespace pnpmri::nn

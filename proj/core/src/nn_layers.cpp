#include "pnpmri/nn_layers.hpp"

#include "pnpmri/error.hpp"

#include <Eigen/Dense>

#include <algorithm>

namespace pnpmri::nn {

std::size_t reflect_index(long i, std::size_t n) {
  const long m = static_cast<long>(n);
  if (m == 1) return 0;
  while (i < 0 || i >= m) {
    if (i < 0) i = -i;
    if (i >= m) i = 2 * m - 2 - i;
  }
  return static_cast<std::size_t>(i);
}

Tensor3 reflect_pad(const Tensor3 &x, std::size_t pad) {
  Tensor3 out(x.channels, x.rows + 2 * pad, x.cols + 2 * pad);
  const long p = static_cast<long>(pad);
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t r = 0; r < out.rows; ++r) {
      const std::size_t sr = reflect_index(static_cast<long>(r) - p, x.rows);
      const double *src = x.plane(c) + sr * x.cols;
      double *dst = out.plane(c) + r * out.cols;
      for (std::size_t w = 0; w < out.cols; ++w) dst[w] = src[reflect_index(static_cast<long>(w) - p, x.cols)];
    }
  }
  return out;
}

Tensor3 reflect_pad_backward(const Tensor3 &g_padded, std::size_t rows, std::size_t cols, std::size_t pad) {
  Tensor3 out(g_padded.channels, rows, cols);
  const long p = static_cast<long>(pad);
  for (std::size_t c = 0; c < g_padded.channels; ++c) {
    for (std::size_t r = 0; r < g_padded.rows; ++r) {
      const std::size_t sr = reflect_index(static_cast<long>(r) - p, rows);
      const double *src = g_padded.plane(c) + r * g_padded.cols;
      double *dst = out.plane(c) + sr * cols;
      for (std::size_t w = 0; w < g_padded.cols; ++w) dst[reflect_index(static_cast<long>(w) - p, cols)] += src[w];
    }
  }
  return out;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row (i, ky, kx) holds the padded input plane i shifted by (ky, kx).
RowMatrix im2col(const Tensor3 &padded, std::size_t k, std::size_t rows, std::size_t cols) {
  RowMatrix m(static_cast<Eigen::Index>(padded.channels * k * k), static_cast<Eigen::Index>(rows * cols));
  for (std::size_t i = 0; i < padded.channels; ++i) {
    const double *src = padded.plane(i);
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        double *dst = m.row(static_cast<Eigen::Index>((i * k + ky) * k + kx)).data();
        for (std::size_t y = 0; y < rows; ++y) {
          std::copy_n(src + (y + ky) * padded.cols + kx, cols, dst + y * cols);
        }
      }
    }
  }
  return m;
}

} // namespace

Tensor3 conv_forward_padded(const ConvLayer &layer, const Tensor3 &padded) {
  const std::size_t k = layer.kernel;
  if (padded.channels != layer.in_channels) {
    throw DimensionMismatch("conv: input has " + std::to_string(padded.channels) + " channels, layer expects " +
                            std::to_string(layer.in_channels));
  }
  const std::size_t rows = padded.rows - (k - 1);
  const std::size_t cols = padded.cols - (k - 1);
  const auto n = static_cast<Eigen::Index>(rows * cols);
  const auto taps = static_cast<Eigen::Index>(layer.in_channels * k * k);
  Tensor3 out(layer.out_channels, rows, cols);
  Eigen::Map<const RowMatrix> w(layer.weight.data(), static_cast<Eigen::Index>(layer.out_channels), taps);
  Eigen::Map<RowMatrix> y(out.data.data(), static_cast<Eigen::Index>(layer.out_channels), n);
  y.noalias() = w * im2col(padded, k, rows, cols);
  for (std::size_t o = 0; o < layer.out_channels; ++o) y.row(static_cast<Eigen::Index>(o)).array() += layer.bias[o];
  return out;
}

Tensor3 conv_forward(const ConvLayer &layer, const Tensor3 &x) {
  return conv_forward_padded(layer, reflect_pad(x, layer.kernel / 2));
}

Tensor3 conv_backward(const ConvLayer &layer, const Tensor3 &padded_input, const Tensor3 &g_out, ConvGrad &grad) {
  const std::size_t k = layer.kernel;
  const std::size_t pad = k / 2;
  const std::size_t rows = g_out.rows;
  const std::size_t cols = g_out.cols;
  if (grad.weight.size() != layer.weight.size()) grad.weight.assign(layer.weight.size(), 0.0);
  if (grad.bias.size() != layer.bias.size()) grad.bias.assign(layer.bias.size(), 0.0);

  const auto n = static_cast<Eigen::Index>(rows * cols);
  const auto outs = static_cast<Eigen::Index>(layer.out_channels);
  const auto taps = static_cast<Eigen::Index>(layer.in_channels * k * k);
  Eigen::Map<const RowMatrix> g(g_out.data.data(), outs, n);
  Eigen::Map<const RowMatrix> w(layer.weight.data(), outs, taps);
  Eigen::Map<RowMatrix> gw(grad.weight.data(), outs, taps);
  Eigen::Map<Eigen::VectorXd> gb(grad.bias.data(), outs);

  gb += g.rowwise().sum();
  gw.noalias() += g * im2col(padded_input, k, rows, cols).transpose();
  const RowMatrix gcol = w.transpose() * g;

  Tensor3 g_padded(layer.in_channels, padded_input.rows, padded_input.cols);
  for (std::size_t i = 0; i < layer.in_channels; ++i) {
    double *dst = g_padded.plane(i);
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const double *src = gcol.row(static_cast<Eigen::Index>((i * k + ky) * k + kx)).data();
        for (std::size_t y = 0; y < rows; ++y) {
          double *d = dst + (y + ky) * padded_input.cols + kx;
          const double *s = src + y * cols;
          for (std::size_t x = 0; x < cols; ++x) d[x] += s[x];
        }
      }
    }
  }
  return reflect_pad_backward(g_padded, padded_input.rows - 2 * pad, padded_input.cols - 2 * pad, pad);
}

void relu_inplace(Tensor3 &x) {
  for (auto &v : x.data) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(const Tensor3 &relu_output, Tensor3 &g) {
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    if (!(relu_output.data[i] > 0.0)) g.data[i] = 0.0;
  }
}

Tensor3 avg_pool2(const Tensor3 &x) {
  if (x.rows % 2 != 0 || x.cols % 2 != 0) throw InvalidGeometry("avg_pool2: odd spatial size");
  Tensor3 out(x.channels, x.rows / 2, x.cols / 2);
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t r = 0; r < out.rows; ++r) {
      for (std::size_t w = 0; w < out.cols; ++w) {
        out.at(c, r, w) = 0.25 * (x.at(c, 2 * r, 2 * w) + x.at(c, 2 * r, 2 * w + 1) + x.at(c, 2 * r + 1, 2 * w) +
                                  x.at(c, 2 * r + 1, 2 * w + 1));
      }
    }
  }
  return out;
}

Tensor3 avg_pool2_backward(const Tensor3 &g) {
  Tensor3 out(g.channels, g.rows * 2, g.cols * 2);
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t r = 0; r < out.rows; ++r) {
      for (std::size_t w = 0; w < out.cols; ++w) out.at(c, r, w) = 0.25 * g.at(c, r / 2, w / 2);
    }
  }
  return out;
}

Tensor3 upsample2(const Tensor3 &x) {
  Tensor3 out(x.channels, x.rows * 2, x.cols * 2);
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t r = 0; r < out.rows; ++r) {
      for (std::size_t w = 0; w < out.cols; ++w) out.at(c, r, w) = x.at(c, r / 2, w / 2);
    }
  }
  return out;
}

Tensor3 upsample2_backward(const Tensor3 &g) {
  Tensor3 out(g.channels, g.rows / 2, g.cols / 2);
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t r = 0; r < g.rows; ++r) {
      for (std::size_t w = 0; w < g.cols; ++w) out.at(c, r / 2, w / 2) += g.at(c, r, w);
    }
  }
  return out;
}

Tensor3 concat(const Tensor3 &a, const Tensor3 &b) {
  if (a.rows != b.rows || a.cols != b.cols) throw DimensionMismatch("concat: spatial size mismatch");
  Tensor3 out(a.channels + b.channels, a.rows, a.cols);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<long>(a.data.size()));
  return out;
}

void concat_backward(const Tensor3 &g, std::size_t a_channels, Tensor3 &ga, Tensor3 &gb) {
  const std::size_t plane = g.rows * g.cols;
  ga = Tensor3(a_channels, g.rows, g.cols);
  gb = Tensor3(g.channels - a_channels, g.rows, g.cols);
  std::copy(g.data.begin(), g.data.begin() + static_cast<long>(a_channels * plane), ga.data.begin());
  std::copy(g.data.begin() + static_cast<long>(a_channels * plane), g.data.end(), gb.data.begin());
}

} // namespace pnpmri::nn

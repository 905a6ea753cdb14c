#include "pnpmri/cnn.hpp"

#include "pnpmri/error.hpp"

#include <cmath>
#include <random>

namespace pnpmri {

using nn::ConvLayer;
using nn::Tensor3;

namespace {

struct LayerPlan {
  std::vector<std::vector<std::size_t>> enc;
  std::vector<std::size_t> up;
  std::vector<std::vector<std::size_t>> dec;
  std::vector<std::size_t> skip_channels;
  std::vector<std::size_t> level_channels;
  std::size_t head = 0;
  std::vector<std::pair<std::size_t, std::size_t>> shapes; // (in, out)
};

LayerPlan plan_layers(const CnnArchitecture &arch) {
  arch.validate();
  const std::size_t levels = arch.num_levels;
  LayerPlan p;
  p.enc.resize(levels);
  p.dec.resize(levels);
  p.up.assign(levels, 0);
  p.skip_channels.assign(levels, 0);
  p.level_channels.assign(levels, 0);
  std::size_t ch = CnnArchitecture::kChannels;
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t target = arch.base_filters << l;
    p.level_channels[l] = target;
    for (std::size_t j = 0; j < arch.convs_per_level; ++j) {
      p.enc[l].push_back(p.shapes.size());
      p.shapes.emplace_back(ch, target);
      ch = target;
    }
    p.skip_channels[l] = ch;
  }
  for (std::size_t l = levels - 1; l-- > 0;) {
    const std::size_t target = p.level_channels[l];
    p.up[l] = p.shapes.size();
    p.shapes.emplace_back(ch, target);
    ch = target + p.skip_channels[l];
    for (std::size_t j = 0; j < arch.convs_per_level; ++j) {
      p.dec[l].push_back(p.shapes.size());
      p.shapes.emplace_back(ch, target);
      ch = target;
    }
  }
  p.head = p.shapes.size();
  p.shapes.emplace_back(ch, CnnArchitecture::kChannels);
  return p;
}

struct Tape {
  std::vector<Tensor3> padded_inputs;
  std::vector<Tensor3> outputs;
};

Tensor3 run_conv(const CnnWeights &w, std::size_t idx, const Tensor3 &x, bool relu, Tape *tape) {
  const ConvLayer &layer = w.layers[idx];
  Tensor3 padded = nn::reflect_pad(x, layer.kernel / 2);
  Tensor3 y = nn::conv_forward_padded(layer, padded);
  if (relu) nn::relu_inplace(y);
  if (tape) {
    tape->padded_inputs[idx] = std::move(padded);
    tape->outputs[idx] = y;
  }
  return y;
}

Tensor3 forward_impl(const CnnWeights &w, const CnnArchitecture &arch, const LayerPlan &plan, const Tensor3 &input,
                     Tape *tape) {
  if (tape) {
    tape->padded_inputs.assign(plan.shapes.size(), {});
    tape->outputs.assign(plan.shapes.size(), {});
  }
  const std::size_t levels = arch.num_levels;
  std::vector<Tensor3> skips(levels);
  Tensor3 h = input;
  for (std::size_t l = 0; l < levels; ++l) {
    for (auto idx : plan.enc[l]) h = run_conv(w, idx, h, true, tape);
    if (l + 1 < levels) {
      skips[l] = h;
      h = nn::avg_pool2(h);
    }
  }
  for (std::size_t l = levels - 1; l-- > 0;) {
    h = nn::upsample2(h);
    h = run_conv(w, plan.up[l], h, true, tape);
    h = nn::concat(h, skips[l]);
    for (auto idx : plan.dec[l]) h = run_conv(w, idx, h, true, tape);
  }
  Tensor3 out = run_conv(w, plan.head, h, false, tape);
  if (arch.residual) {
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += input.data[i];
  }
  return out;
}

void backward_impl(const CnnWeights &w, const CnnArchitecture &arch, const LayerPlan &plan, const Tape &tape,
                   Tensor3 g, CnnWeights &grad) {
  auto conv_back = [&](std::size_t idx, Tensor3 g_out, bool relu) {
    if (relu) nn::relu_backward_inplace(tape.outputs[idx], g_out);
    nn::ConvGrad cg{std::move(grad.layers[idx].weight), std::move(grad.layers[idx].bias)};
    Tensor3 gx = nn::conv_backward(w.layers[idx], tape.padded_inputs[idx], g_out, cg);
    grad.layers[idx].weight = std::move(cg.weight);
    grad.layers[idx].bias = std::move(cg.bias);
    return gx;
  };

  const std::size_t levels = arch.num_levels;
  std::vector<Tensor3> skip_grads(levels);
  g = conv_back(plan.head, std::move(g), false);
  for (std::size_t l = 0; l + 1 < levels; ++l) {
    for (auto it = plan.dec[l].rbegin(); it != plan.dec[l].rend(); ++it) g = conv_back(*it, std::move(g), true);
    Tensor3 g_up;
    nn::concat_backward(g, plan.level_channels[l], g_up, skip_grads[l]);
    g = conv_back(plan.up[l], std::move(g_up), true);
    g = nn::upsample2_backward(g);
  }
  for (std::size_t l = levels; l-- > 0;) {
    if (l + 1 < levels) {
      g = nn::avg_pool2_backward(g);
      for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += skip_grads[l].data[i];
    }
    for (auto it = plan.enc[l].rbegin(); it != plan.enc[l].rend(); ++it) g = conv_back(*it, std::move(g), true);
  }
}

void check_input(const TwoChannelTensor &t) {
  if (t.channel0.size() != t.rows * t.cols || t.channel1.size() != t.rows * t.cols) {
    throw DimensionMismatch("TwoChannelTensor: channel length mismatch");
  }
}

} // namespace

void CnnArchitecture::validate() const {
  if (num_levels < 1) throw InvalidGeometry("CnnArchitecture: num_levels must be >= 1");
  if (kernel_size % 2 == 0) throw InvalidGeometry("CnnArchitecture: kernel_size must be odd");
  if (base_filters < 1) throw InvalidGeometry("CnnArchitecture: base_filters must be >= 1");
  if (num_levels > 16) throw InvalidGeometry("CnnArchitecture: num_levels too large");
}

std::size_t CnnWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto &l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

CnnWeights make_zero_weights(const CnnArchitecture &arch) {
  const LayerPlan plan = plan_layers(arch);
  CnnWeights w;
  for (auto [in, out] : plan.shapes) w.layers.emplace_back(in, out, arch.kernel_size);
  return w;
}

CnnWeights make_initial_weights(const CnnArchitecture &arch, std::uint64_t seed) {
  CnnWeights w = make_zero_weights(arch);
  std::mt19937_64 rng(seed);
  for (auto &layer : w.layers) {
    const double fan_in = static_cast<double>(layer.in_channels * layer.kernel * layer.kernel);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (auto &v : layer.weight) v = dist(rng);
  }
  return w;
}

void check_weights(const CnnWeights &w, const CnnArchitecture &arch) {
  const LayerPlan plan = plan_layers(arch);
  if (w.layers.size() != plan.shapes.size()) {
    throw DimensionMismatch("CnnWeights: " + std::to_string(w.layers.size()) + " layers, architecture needs " +
                            std::to_string(plan.shapes.size()));
  }
  for (std::size_t i = 0; i < plan.shapes.size(); ++i) {
    const auto &l = w.layers[i];
    const auto [in, out] = plan.shapes[i];
    if (l.in_channels != in || l.out_channels != out || l.kernel != arch.kernel_size ||
        l.weight.size() != in * out * arch.kernel_size * arch.kernel_size || l.bias.size() != out) {
      throw DimensionMismatch("CnnWeights: layer " + std::to_string(i) + " shape does not match architecture");
    }
  }
}

Tensor3 to_tensor(const TwoChannelTensor &t) {
  check_input(t);
  Tensor3 out(2, t.rows, t.cols);
  std::copy(t.channel0.begin(), t.channel0.end(), out.plane(0));
  std::copy(t.channel1.begin(), t.channel1.end(), out.plane(1));
  return out;
}

TwoChannelTensor to_two_channel(const Tensor3 &t) {
  if (t.channels != 2) throw DimensionMismatch("to_two_channel: tensor has " + std::to_string(t.channels) + " channels");
  const std::size_t n = t.rows * t.cols;
  return TwoChannelTensor(t.rows, t.cols, std::vector<double>(t.plane(0), t.plane(0) + n),
                          std::vector<double>(t.plane(1), t.plane(1) + n));
}

TwoChannelTensor cnn_forward(const CnnWeights &w, const CnnArchitecture &arch, const TwoChannelTensor &t) {
  check_weights(w, arch);
  const LayerPlan plan = plan_layers(arch);
  Tensor3 x = to_tensor(t);
  const std::size_t m = arch.size_multiple();
  const std::size_t rows = (t.rows + m - 1) / m * m;
  const std::size_t cols = (t.cols + m - 1) / m * m;
  if (rows == t.rows && cols == t.cols) return to_two_channel(forward_impl(w, arch, plan, x, nullptr));

  Tensor3 padded(2, rows, cols);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t q = 0; q < cols; ++q) {
        padded.at(c, r, q) =
            x.at(c, nn::reflect_index(static_cast<long>(r), t.rows), nn::reflect_index(static_cast<long>(q), t.cols));
      }
    }
  }
  const Tensor3 y = forward_impl(w, arch, plan, padded, nullptr);
  Tensor3 cropped(2, t.rows, t.cols);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t r = 0; r < t.rows; ++r) {
      for (std::size_t q = 0; q < t.cols; ++q) cropped.at(c, r, q) = y.at(c, r, q);
    }
  }
  return to_two_channel(cropped);
}

double mse_loss(const TwoChannelTensor &pred, const TwoChannelTensor &target) {
  if (pred.rows != target.rows || pred.cols != target.cols) throw DimensionMismatch("mse_loss: shape mismatch");
  check_input(pred);
  check_input(target);
  const std::size_t n = pred.rows * pred.cols;
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d0 = pred.channel0[i] - target.channel0[i];
    const double d1 = pred.channel1[i] - target.channel1[i];
    acc += d0 * d0 + d1 * d1;
  }
  return acc / static_cast<double>(2 * n);
}

TwoChannelTensor mse_loss_gradient(const TwoChannelTensor &pred, const TwoChannelTensor &target) {
  if (pred.rows != target.rows || pred.cols != target.cols) throw DimensionMismatch("mse_loss: shape mismatch");
  const std::size_t n = pred.rows * pred.cols;
  TwoChannelTensor g(pred.rows, pred.cols);
  const double scale = 2.0 / static_cast<double>(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    g.channel0[i] = scale * (pred.channel0[i] - target.channel0[i]);
    g.channel1[i] = scale * (pred.channel1[i] - target.channel1[i]);
  }
  return g;
}

CnnWeights cnn_backward(const CnnWeights &w, const CnnArchitecture &arch, const TwoChannelTensor &t,
                        const TwoChannelTensor &upstream) {
  check_weights(w, arch);
  if (upstream.rows != t.rows || upstream.cols != t.cols) throw DimensionMismatch("cnn_backward: gradient shape");
  const std::size_t m = arch.size_multiple();
  if (t.rows % m != 0 || t.cols % m != 0) {
    throw InvalidGeometry("cnn_backward: input size must be a multiple of " + std::to_string(m));
  }
  const LayerPlan plan = plan_layers(arch);
  Tape tape;
  forward_impl(w, arch, plan, to_tensor(t), &tape);
  CnnWeights grad = make_zero_weights(arch);
  backward_impl(w, arch, plan, tape, to_tensor(upstream), grad);
  return grad;
}

double loss_and_gradient(const CnnWeights &w, const CnnArchitecture &arch, const TwoChannelTensor &x,
                         const TwoChannelTensor &y, CnnWeights &grad) {
  check_weights(w, arch);
  const std::size_t m = arch.size_multiple();
  if (x.rows % m != 0 || x.cols % m != 0) {
    throw InvalidGeometry("loss_and_gradient: input size must be a multiple of " + std::to_string(m));
  }
  const LayerPlan plan = plan_layers(arch);
  Tape tape;
  const TwoChannelTensor pred = to_two_channel(forward_impl(w, arch, plan, to_tensor(x), &tape));
  const double loss = mse_loss(pred, y);
  if (grad.layers.size() != w.layers.size()) grad = make_zero_weights(arch);
  backward_impl(w, arch, plan, tape, to_tensor(mse_loss_gradient(pred, y)), grad);
  return loss;
}

} // namespace pnpmri

#include "pnpmri/denoiser.hpp"

#include "pnpmri/error.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace pnpmri {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("AdamConfig: learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw Error("AdamConfig: beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw Error("AdamConfig: beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw Error("AdamConfig: epsilon must be positive");
  if (batch_size < 1) throw Error("AdamConfig: batch_size must be >= 1");
  if (patch_size > 0 && patches_per_pair < 1) throw Error("AdamConfig: patches_per_pair must be >= 1");
}

double adam_update_scalar(double w, double g, double &m, double &v, const AdamConfig &cfg, std::size_t step) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
  const double t = static_cast<double>(step);
  const double m_hat = m / (1.0 - std::pow(cfg.beta1, t));
  const double v_hat = v / (1.0 - std::pow(cfg.beta2, t));
  return w - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
}

void adam_step(CnnWeights &w, const CnnWeights &grad, AdamState &state, const AdamConfig &cfg, std::size_t step) {
  if (step < 1) throw Error("adam_step: step index starts at 1");
  if (grad.layers.size() != w.layers.size()) throw DimensionMismatch("adam_step: gradient layer count");
  const std::size_t n = w.parameter_count();
  if (state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n || state.v.size() != n) throw DimensionMismatch("adam_step: moment state size");
  std::size_t k = 0;
  auto update = [&](std::vector<double> &params, const std::vector<double> &g) {
    if (params.size() != g.size()) throw DimensionMismatch("adam_step: gradient shape");
    for (std::size_t i = 0; i < params.size(); ++i, ++k) {
      params[i] = adam_update_scalar(params[i], g[i], state.m[k], state.v[k], cfg, step);
    }
  };
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    update(w.layers[l].weight, grad.layers[l].weight);
    update(w.layers[l].bias, grad.layers[l].bias);
  }
}

double dataset_loss(const CnnWeights &w, const CnnArchitecture &arch, const std::vector<TrainingPair> &pairs) {
  if (pairs.empty()) return 0.0;
  double acc = 0.0;
  for (const auto &p : pairs) acc += mse_loss(cnn_forward(w, arch, p.noisy), p.clean);
  return acc / static_cast<double>(pairs.size());
}

namespace {

TwoChannelTensor crop(const TwoChannelTensor &t, std::size_t r0, std::size_t c0, std::size_t size) {
  TwoChannelTensor out(size, size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      out.channel0[r * size + c] = t.channel0[(r0 + r) * t.cols + c0 + c];
      out.channel1[r * size + c] = t.channel1[(r0 + r) * t.cols + c0 + c];
    }
  }
  return out;
}

std::vector<TrainingPair> training_samples(const std::vector<TrainingPair> &dataset, const CnnArchitecture &arch,
                                           const AdamConfig &cfg, std::mt19937_64 &rng) {
  const std::size_t rows = dataset.front().noisy.rows;
  const std::size_t cols = dataset.front().noisy.cols;
  for (const auto &p : dataset) {
    if (p.noisy.rows != rows || p.noisy.cols != cols || p.clean.rows != rows || p.clean.cols != cols) {
      throw DimensionMismatch("train_denoiser: dataset pairs must share one size");
    }
  }
  const std::size_t m = arch.size_multiple();
  if (cfg.patch_size == 0) {
    if (rows % m != 0 || cols % m != 0) {
      throw InvalidGeometry("train_denoiser: image size must be a multiple of " + std::to_string(m));
    }
    return dataset;
  }
  if (cfg.patch_size % m != 0) {
    throw InvalidGeometry("train_denoiser: patch_size must be a multiple of " + std::to_string(m));
  }
  if (cfg.patch_size > rows || cfg.patch_size > cols) throw InvalidGeometry("train_denoiser: patch larger than pair");
  std::vector<TrainingPair> out;
  out.reserve(dataset.size() * cfg.patches_per_pair);
  for (const auto &p : dataset) {
    for (std::size_t k = 0; k < cfg.patches_per_pair; ++k) {
      const std::size_t r0 = rng() % (rows - cfg.patch_size + 1);
      const std::size_t c0 = rng() % (cols - cfg.patch_size + 1);
      out.push_back({crop(p.noisy, r0, c0, cfg.patch_size), crop(p.clean, r0, c0, cfg.patch_size)});
    }
  }
  return out;
}

void scale_in_place(CnnWeights &g, double s) {
  for (auto &l : g.layers) {
    for (auto &v : l.weight) v *= s;
    for (auto &v : l.bias) v *= s;
  }
}

} // namespace

TrainResult train_denoiser(const std::vector<TrainingPair> &dataset, const CnnArchitecture &arch,
                           const AdamConfig &cfg) {
  cfg.validate();
  arch.validate();
  if (dataset.empty()) throw EmptyDataset("train_denoiser: empty dataset");

  TrainResult result;
  result.weights = make_initial_weights(arch, cfg.rng_seed);
  std::mt19937_64 rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);
  const std::vector<TrainingPair> samples = training_samples(dataset, arch, cfg, rng);

  result.initial_loss = dataset_loss(result.weights, arch, samples);
  AdamState state;
  std::size_t step = 0;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      CnnWeights grad = make_zero_weights(arch);
      for (std::size_t j = start; j < end; ++j) {
        const auto &s = samples[order[j]];
        epoch_loss += loss_and_gradient(result.weights, arch, s.noisy, s.clean, grad);
      }
      scale_in_place(grad, 1.0 / static_cast<double>(end - start));
      adam_step(result.weights, grad, state, cfg, ++step);
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  result.final_loss = cfg.epochs == 0 ? result.initial_loss : dataset_loss(result.weights, arch, samples);
  return result;
}

} // namespace pnpmri

#pragma once

#include "pnpmri/cnn.hpp"
#include "pnpmri/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace pnpmri {

/// Dimension-preserving two-channel denoiser plugged into the ADMM loop.
class Denoiser {
public:
  virtual ~Denoiser() = default;
  virtual TwoChannelTensor apply(const TwoChannelTensor &t) const = 0;
  virtual std::string name() const = 0;
};

class IdentityDenoiser final : public Denoiser {
public:
  TwoChannelTensor apply(const TwoChannelTensor &t) const override { return t; }
  std::string name() const override { return "identity"; }
};

/// Channel-wise separable Gaussian blur, radius ceil(3 sigma), reflected borders.
class GaussianDenoiser final : public Denoiser {
public:
  explicit GaussianDenoiser(double sigma);
  TwoChannelTensor apply(const TwoChannelTensor &t) const override;
  std::string name() const override { return "gaussian"; }
  /// Normalized 1-D taps, index 0 is the center offset -radius.
  const std::vector<double> &taps() const { return taps_; }

private:
  double sigma_;
  std::vector<double> taps_;
};

class CnnDenoiser final : public Denoiser {
public:
  CnnDenoiser(CnnArchitecture arch, CnnWeights weights);
  TwoChannelTensor apply(const TwoChannelTensor &t) const override;
  std::string name() const override { return "cnn"; }
  const CnnArchitecture &architecture() const { return arch_; }
  const CnnWeights &weights() const { return weights_; }

private:
  CnnArchitecture arch_;
  CnnWeights weights_;
};

std::unique_ptr<Denoiser> gaussian_denoiser(double sigma);

/// Scale-normalized complex denoising: divide by s = max(max|x|, 1e-12),
/// denoise the real/imaginary channels, multiply back by s.
Image denoise_complex(const Denoiser &den, const Image &x);

// ---------------------------------------------------------------------------
// Training

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  std::uint64_t rng_seed = 0;
  /// Square training crops of this size; 0 trains on whole pairs.
  std::size_t patch_size = 0;
  std::size_t patches_per_pair = 1;

  void validate() const;
};

/// First and second moment estimates, one entry per parameter in
/// declaration order (kernel then bias, layer by layer).
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

/// One bias-corrected ADAM update; `step` starts at 1.
void adam_step(CnnWeights &w, const CnnWeights &grad, AdamState &state, const AdamConfig &cfg, std::size_t step);
/// Scalar form of the same update, used for the optimizer's own tests.
double adam_update_scalar(double w, double g, double &m, double &v, const AdamConfig &cfg, std::size_t step);

struct TrainingPair {
  TwoChannelTensor noisy;
  TwoChannelTensor clean;
};

struct TrainResult {
  CnnWeights weights;
  /// Mean mini-batch loss per epoch.
  std::vector<double> epoch_losses;
  /// Loss over the full training set before the first and after the last update.
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Deterministic in (dataset, arch, cfg). Throws EmptyDataset on no pairs.
TrainResult train_denoiser(const std::vector<TrainingPair> &dataset, const CnnArchitecture &arch,
                           const AdamConfig &cfg);

/// Loss of `w` averaged over `pairs`.
double dataset_loss(const CnnWeights &w, const CnnArchitecture &arch, const std::vector<TrainingPair> &pairs);

// ---------------------------------------------------------------------------
// PNPW checkpoints

struct Checkpoint {
  CnnArchitecture arch;
  CnnWeights weights;
  std::map<std::string, std::string> header;
};

void write_checkpoint(std::ostream &os, const CnnArchitecture &arch, const CnnWeights &w,
                      const std::map<std::string, std::string> &extra = {});
Checkpoint read_checkpoint(std::istream &is);
void save_checkpoint(const std::string &path, const CnnArchitecture &arch, const CnnWeights &w,
                     const std::map<std::string, std::string> &extra = {});
Checkpoint load_checkpoint(const std::string &path);

} // namespace pnpmri

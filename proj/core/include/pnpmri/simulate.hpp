#pragma once

#include "pnpmri/denoiser.hpp"
#include "pnpmri/operators.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pnpmri {

enum class PhantomKind { SheppLogan, RandomEllipses };

std::string to_string(PhantomKind kind);
PhantomKind phantom_kind_from_string(const std::string &name);

struct PhantomSpec {
  PhantomKind kind = PhantomKind::SheppLogan;
  std::size_t rows = 128;
  std::size_t cols = 128;
  std::size_t num_ellipses = 10; ///< random-ellipses only
  /// Shepp-Logan family: 0 gives the standard phantom, larger values perturb
  /// ellipse centers, axes, angles and intensities.
  double jitter = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Real-valued phantom with intensities in [0, 1]. Shepp-Logan uses the
/// modified (high-contrast) ten-ellipse parameterization.
Image make_phantom(const PhantomSpec &spec);

/// L Gaussian receive profiles centered on the image border at equal angles,
/// each with a random linear phase ramp, normalized so sum_l |S_l|^2 = 1.
SensitivityMaps make_sensitivity_maps(std::size_t num_coils, std::size_t rows, std::size_t cols,
                                      std::uint64_t rng_seed);

struct MaskSpec {
  PatternKind pattern = PatternKind::Uniform1d;
  std::size_t accel_rows = 4;
  std::size_t accel_cols = 1; ///< uniform-2d only
  std::size_t acs = 24;

  std::string describe() const;
};

/// Every accel_rows-th row (and every accel_cols-th column for uniform-2d)
/// plus the central ACS block. R = 1 (and R' = 1) yields a full mask.
SamplingMask make_mask(std::size_t rows, std::size_t cols, const MaskSpec &spec);

struct NoiseModel {
  /// Standard deviation of the real and of the imaginary part of each sample.
  double sigma = 0.0;
  std::uint64_t rng_seed = 0;
};

/// d = E x + P n with i.i.d. complex Gaussian n.
KSpaceData simulate_acquisition(const Image &x, const SensitivityMaps &maps, const SamplingMask &mask,
                                const NoiseModel &noise);

/// Low-resolution sensitivity estimate from the Hann-windowed ACS block.
/// Throws InsufficientAcs when the mask has no ACS block or it carries no signal.
SensitivityMaps estimate_maps_lowres(const KSpaceData &d);

// ---------------------------------------------------------------------------
// Denoiser training sets

/// Normalizes a (noisy, clean) image pair by max|noisy| and splits it into channels.
TrainingPair make_training_pair(const Image &noisy, const Image &clean);

struct DatasetSpec {
  std::size_t count = 200;
  PhantomSpec phantom; ///< rng_seed is the base seed; pair k uses base + k
  std::vector<double> noise_sigmas{0.05};
  /// Every `aliased_every`-th pair (when nonzero) is a zero-filled
  /// reconstruction from an undersampled acquisition instead of a noisy copy.
  std::size_t aliased_every = 0;
  std::size_t num_coils = 4;
  MaskSpec mask;
  double acquisition_sigma = 0.0;
  std::uint64_t seed = 0;
};

std::vector<TrainingPair> make_denoiser_dataset(const DatasetSpec &spec);

} // namespace pnpmri

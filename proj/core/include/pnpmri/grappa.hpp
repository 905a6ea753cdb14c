#pragma once

#include "pnpmri/types.hpp"

#include <vector>

namespace pnpmri {

/// Where calibration windows are placed inside the ACS block.
enum class CalibrationSampling {
  Sliding,        ///< every row and column position (shift-invariant data)
  LatticeAligned, ///< only rows on the same lattice phase as the target
};

/// Kernel shape for one 1-D GRAPPA pass along the row (phase-encode) axis.
///
/// A missing row t = r0 + delta (r0 on the acquisition lattice, 0 < delta < R)
/// is predicted from rows r0 + (j + 1 - n/2) R, j = 0..n-1, at readout
/// offsets (m - w/2) * readout_spacing, m = 0..w-1, across all coils.
struct GrappaKernelGeometry {
  std::size_t num_source_lines = 4;
  std::size_t kernel_readout_width = 5;
  std::size_t acceleration = 4;
  /// Column step between readout taps; > 1 when columns are themselves undersampled.
  std::size_t readout_spacing = 1;
  CalibrationSampling calibration = CalibrationSampling::Sliding;

  void validate() const;
  std::size_t unknowns(std::size_t num_coils) const { return num_coils * num_source_lines * kernel_readout_width; }
  long source_row_offset(std::size_t j) const;
  long readout_offset(std::size_t m) const;
};

/// Complex weights per (delta, target coil) over (source coil, source line, readout tap).
struct GrappaWeights {
  GrappaKernelGeometry geometry;
  std::size_t num_coils = 0;
  /// per_offset[delta - 1][target * unknowns + (coil * lines + line) * width + tap]
  std::vector<std::vector<Complex>> per_offset;

  Complex weight(std::size_t delta, std::size_t target_coil, std::size_t source_coil, std::size_t line,
                 std::size_t tap) const;
  Complex &weight(std::size_t delta, std::size_t target_coil, std::size_t source_coil, std::size_t line,
                  std::size_t tap);
};

/// The fully sampled central block of `d` (all coils), rows x cols of the ACS.
CoilArray extract_acs(const KSpaceData &d);

/// Ridge-regularized least squares over calibration windows in `acs`.
/// `tikhonov` is relative: the ridge is tikhonov * trace(A^H A) / unknowns.
/// Throws InsufficientAcs when there are fewer windows than unknowns.
/// `row_origin` is the full-grid row of acs row 0; it only matters for
/// LatticeAligned calibration.
GrappaWeights grappa_calibrate(const CoilArray &acs, const GrappaKernelGeometry &geom, double tikhonov,
                               std::size_t row_origin = 0);

/// Fills every unsampled location of a uniform-1d acquisition. Sampled
/// entries are copied unchanged; phase-encode and readout indices wrap
/// circularly. The result carries a full mask.
KSpaceData grappa_apply(const KSpaceData &d, const GrappaWeights &w, const GrappaKernelGeometry &geom);

/// Pixel-wise sqrt(sum_l |x_l|^2).
Image coil_combine_rss(const CoilArray &images);
Image coil_combine_rss(const std::vector<Image> &images);

/// Per-coil inverse DFT of every coil plane.
CoilArray coil_images(const CoilArray &kspace);

struct GrappaOptions {
  std::size_t num_source_lines = 4;
  std::size_t kernel_readout_width = 5;
  double tikhonov = 1e-4;
  CalibrationSampling calibration = CalibrationSampling::Sliding;
};

/// Calibrate, fill, inverse-transform per coil and RSS-combine. Uniform-2d
/// masks run a row pass on the sampled columns, then a column pass.
Image grappa_reconstruct(const KSpaceData &d, const GrappaOptions &opts = {});

} // namespace pnpmri

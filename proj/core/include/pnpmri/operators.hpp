#pragma once

#include "pnpmri/types.hpp"

namespace pnpmri {

/// Unitary 2-D DFT with the DC component at (floor(rows/2), floor(cols/2)).
Image dft2_centered(const Image &x);
/// Exact inverse of dft2_centered.
Image idft2_centered(const Image &k);

/// Multi-coil Cartesian encoding operator E = P F S.
class EncodingOperator {
public:
  EncodingOperator(SensitivityMaps maps, SamplingMask mask);

  const SensitivityMaps &maps() const { return maps_; }
  const SamplingMask &mask() const { return mask_; }
  std::size_t rows() const { return mask_.rows(); }
  std::size_t cols() const { return mask_.cols(); }
  std::size_t num_coils() const { return maps_.num_coils(); }

  /// Per coil: P (F (S_l x)). Unsampled entries are exact zeros.
  KSpaceData forward(const Image &x) const;
  /// sum_l conj(S_l) F^-1 (P d_l).
  Image adjoint(const KSpaceData &d) const;
  /// adjoint(forward(x)) without materializing the KSpaceData wrapper.
  Image normal(const Image &x) const;

private:
  void check_image(const Image &x, const char *what) const;

  SensitivityMaps maps_;
  SamplingMask mask_;
};

inline KSpaceData forward(const EncodingOperator &op, const Image &x) { return op.forward(x); }
inline Image adjoint(const EncodingOperator &op, const KSpaceData &d) { return op.adjoint(d); }

/// E^H d, the zero-filled reconstruction and the ADMM initializer.
Image zero_filled_recon(const EncodingOperator &op, const KSpaceData &d);

/// Applies P to every coil plane in place (idempotent).
void apply_mask(const SamplingMask &mask, CoilArray &k);

} // namespace pnpmri

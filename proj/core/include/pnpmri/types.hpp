#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pnpmri {

using Complex = std::complex<double>;

/// Complex 2-D image on the reconstruction grid, row-major.
class Image {
public:
  Image() = default;
  /// Zero image.
  Image(std::size_t rows, std::size_t cols);
  /// Takes ownership of `values`; throws DimensionMismatch on a size mismatch
  /// and Error on non-finite entries.
  Image(std::size_t rows, std::size_t cols, std::vector<Complex> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  Complex operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  Complex &operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  Complex operator[](std::size_t i) const { return values_[i]; }
  Complex &operator[](std::size_t i) { return values_[i]; }

  std::span<const Complex> values() const { return values_; }
  std::span<Complex> values() { return values_; }

  bool same_shape(const Image &other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  bool operator==(const Image &other) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> values_;
};

/// Multi-coil complex array, coil-outermost then row-major.
class CoilArray {
public:
  CoilArray() = default;
  CoilArray(std::size_t num_coils, std::size_t rows, std::size_t cols);
  CoilArray(std::size_t num_coils, std::size_t rows, std::size_t cols, std::vector<Complex> values);

  std::size_t num_coils() const { return coils_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t plane_size() const { return rows_ * cols_; }

  Complex operator()(std::size_t l, std::size_t r, std::size_t c) const {
    return values_[(l * rows_ + r) * cols_ + c];
  }
  Complex &operator()(std::size_t l, std::size_t r, std::size_t c) {
    return values_[(l * rows_ + r) * cols_ + c];
  }

  std::span<const Complex> coil(std::size_t l) const {
    return std::span<const Complex>(values_).subspan(l * plane_size(), plane_size());
  }
  std::span<Complex> coil(std::size_t l) {
    return std::span<Complex>(values_).subspan(l * plane_size(), plane_size());
  }
  Image coil_image(std::size_t l) const;
  void set_coil(std::size_t l, const Image &img);

  std::span<const Complex> values() const { return values_; }
  std::span<Complex> values() { return values_; }

  bool operator==(const CoilArray &other) const = default;

private:
  std::size_t coils_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> values_;
};

enum class PatternKind { Full, Uniform1d, Uniform2d };

std::string to_string(PatternKind kind);
PatternKind pattern_kind_from_string(const std::string &name);

/// Binary Cartesian undersampling pattern with a fully sampled central block.
///
/// Rows are the primary phase-encode axis; a uniform-1d pattern keeps every
/// `accel_rows`-th row, a uniform-2d pattern additionally keeps only every
/// `accel_cols`-th column. The ACS block spans `acs_rows` x `acs_cols`
/// centered at (rows/2, cols/2).
class SamplingMask {
public:
  SamplingMask() = default;
  SamplingMask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> kept, std::size_t acs_rows,
               std::size_t acs_cols, PatternKind kind, std::size_t accel_rows, std::size_t accel_cols);

  static SamplingMask full(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t acs_rows() const { return acs_rows_; }
  std::size_t acs_cols() const { return acs_cols_; }
  PatternKind pattern_kind() const { return kind_; }
  std::size_t accel_rows() const { return accel_rows_; }
  std::size_t accel_cols() const { return accel_cols_; }

  /// First row / column of the ACS block.
  std::size_t acs_row_begin() const { return rows_ / 2 - acs_rows_ / 2; }
  std::size_t acs_col_begin() const { return cols_ / 2 - acs_cols_ / 2; }
  bool in_acs(std::size_t r, std::size_t c) const;

  bool kept(std::size_t r, std::size_t c) const { return kept_[r * cols_ + c] != 0; }
  bool kept(std::size_t i) const { return kept_[i] != 0; }
  std::span<const std::uint8_t> bits() const { return kept_; }
  std::size_t count_kept() const;

  /// rows*cols / count(kept).
  double acceleration() const;
  bool is_full() const { return count_kept() == rows_ * cols_; }
  /// Human-readable summary such as "uniform-1d R=4 acs=24".
  std::string describe() const;

  bool operator==(const SamplingMask &other) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> kept_;
  std::size_t acs_rows_ = 0;
  std::size_t acs_cols_ = 0;
  PatternKind kind_ = PatternKind::Full;
  std::size_t accel_rows_ = 1;
  std::size_t accel_cols_ = 1;
};

/// Per-coil k-space samples together with the mask that produced them.
/// Unsampled locations hold exact zeros in every coil.
class KSpaceData {
public:
  KSpaceData() = default;
  /// Validates shapes and the zero-at-unsampled invariant.
  KSpaceData(CoilArray samples, SamplingMask mask);
  /// Zeroes every unsampled location before construction.
  static KSpaceData masked(CoilArray samples, SamplingMask mask);

  std::size_t rows() const { return samples_.rows(); }
  std::size_t cols() const { return samples_.cols(); }
  std::size_t num_coils() const { return samples_.num_coils(); }
  const CoilArray &samples() const { return samples_; }
  const SamplingMask &mask() const { return mask_; }

  bool operator==(const KSpaceData &other) const = default;

private:
  CoilArray samples_;
  SamplingMask mask_;
};

/// Pixel-wise normalized coil sensitivities.
class SensitivityMaps {
public:
  /// Pixels whose pre-normalization energy sum_l |S_l|^2 exceeds this are on support.
  static constexpr double kSupportThreshold = 1e-8;

  SensitivityMaps() = default;
  /// Validates the normalization invariant (|sum |S_l|^2 - 1| <= 1e-6 on support,
  /// exact zeros off support).
  SensitivityMaps(CoilArray values, std::vector<std::uint8_t> support);
  /// Computes the support from `raw` and rescales each support pixel to unit energy.
  static SensitivityMaps normalize(const CoilArray &raw, double support_threshold = kSupportThreshold);
  /// Single coil with S = 1 everywhere.
  static SensitivityMaps uniform(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return values_.cols(); }
  std::size_t num_coils() const { return values_.num_coils(); }
  const CoilArray &values() const { return values_; }
  std::span<const std::uint8_t> support() const { return support_; }
  bool on_support(std::size_t i) const { return support_[i] != 0; }

private:
  CoilArray values_;
  std::vector<std::uint8_t> support_;
};

/// Real/imaginary split of an Image, the network-facing representation.
struct TwoChannelTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> channel0;
  std::vector<double> channel1;

  TwoChannelTensor() = default;
  TwoChannelTensor(std::size_t r, std::size_t c) : rows(r), cols(c), channel0(r * c, 0.0), channel1(r * c, 0.0) {}
  TwoChannelTensor(std::size_t r, std::size_t c, std::vector<double> ch0, std::vector<double> ch1);

  bool operator==(const TwoChannelTensor &other) const = default;
};

TwoChannelTensor image_to_channels(const Image &x);
Image channels_to_image(const TwoChannelTensor &t);

// Small numeric helpers shared across modules.

/// Standard complex inner product <a, b> = sum conj(a_i) b_i.
Complex inner(std::span<const Complex> a, std::span<const Complex> b);
double norm2(std::span<const Complex> a);
Image magnitude(const Image &x);
/// a + alpha * b
Image axpy(const Image &a, Complex alpha, const Image &b);
Image scaled(const Image &a, Complex alpha);
Image operator+(const Image &a, const Image &b);
Image operator-(const Image &a, const Image &b);

} // namespace pnpmri

#include "pnpmri/types.hpp"

#include "pnpmri/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pnpmri {

namespace {

void require_finite(std::span<const Complex> values, const char *what) {
  for (const auto &v : values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw Error(std::string(what) + ": non-finite value");
    }
  }
}

std::string shape(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

} // namespace

Image::Image(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols) {}

Image::Image(std::size_t rows, std::size_t cols, std::vector<Complex> values)
  : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw DimensionMismatch("Image " + shape(rows_, cols_) + " given " + std::to_string(values_.size()) +
                            " values");
  }
  require_finite(values_, "Image");
}

CoilArray::CoilArray(std::size_t num_coils, std::size_t rows, std::size_t cols)
  : coils_(num_coils), rows_(rows), cols_(cols), values_(num_coils * rows * cols) {}

CoilArray::CoilArray(std::size_t num_coils, std::size_t rows, std::size_t cols, std::vector<Complex> values)
  : coils_(num_coils), rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != coils_ * rows_ * cols_) {
    throw DimensionMismatch("CoilArray " + std::to_string(coils_) + "x" + shape(rows_, cols_) + " given " +
                            std::to_string(values_.size()) + " values");
  }
  require_finite(values_, "CoilArray");
}

Image CoilArray::coil_image(std::size_t l) const {
  auto c = coil(l);
  return Image(rows_, cols_, std::vector<Complex>(c.begin(), c.end()));
}

void CoilArray::set_coil(std::size_t l, const Image &img) {
  if (img.rows() != rows_ || img.cols() != cols_) {
    throw DimensionMismatch("set_coil: image " + shape(img.rows(), img.cols()) + " vs array " + shape(rows_, cols_));
  }
  std::copy(img.values().begin(), img.values().end(), coil(l).begin());
}

std::string to_string(PatternKind kind) {
  switch (kind) {
  case PatternKind::Full:
    return "full";
  case PatternKind::Uniform1d:
    return "uniform-1d";
  case PatternKind::Uniform2d:
    return "uniform-2d";
  }
  return "full";
}

PatternKind pattern_kind_from_string(const std::string &name) {
  if (name == "full") return PatternKind::Full;
  if (name == "uniform-1d") return PatternKind::Uniform1d;
  if (name == "uniform-2d") return PatternKind::Uniform2d;
  throw InvalidGeometry("unknown mask pattern '" + name + "'");
}

SamplingMask::SamplingMask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> kept, std::size_t acs_rows,
                           std::size_t acs_cols, PatternKind kind, std::size_t accel_rows, std::size_t accel_cols)
  : rows_(rows), cols_(cols), kept_(std::move(kept)), acs_rows_(acs_rows), acs_cols_(acs_cols), kind_(kind),
    accel_rows_(accel_rows), accel_cols_(accel_cols) {
  if (rows_ == 0 || cols_ == 0) throw InvalidGeometry("SamplingMask: empty grid");
  if (kept_.size() != rows_ * cols_) {
    throw DimensionMismatch("SamplingMask " + shape(rows_, cols_) + " given " + std::to_string(kept_.size()) +
                            " flags");
  }
  if (acs_rows_ > rows_ || acs_cols_ > cols_) throw InvalidGeometry("SamplingMask: ACS block larger than grid");
  if (accel_rows_ == 0 || accel_cols_ == 0) throw InvalidGeometry("SamplingMask: zero acceleration");
  for (auto &k : kept_) k = k ? 1 : 0;
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      if (in_acs(r, c) && !this->kept(r, c)) throw InvalidGeometry("SamplingMask: ACS location not kept");
    }
  }
}

SamplingMask SamplingMask::full(std::size_t rows, std::size_t cols) {
  return SamplingMask(rows, cols, std::vector<std::uint8_t>(rows * cols, 1), rows, cols, PatternKind::Full, 1, 1);
}

bool SamplingMask::in_acs(std::size_t r, std::size_t c) const {
  if (acs_rows_ == 0 || acs_cols_ == 0) return false;
  const auto r0 = acs_row_begin();
  const auto c0 = acs_col_begin();
  return r >= r0 && r < r0 + acs_rows_ && c >= c0 && c < c0 + acs_cols_;
}

std::size_t SamplingMask::count_kept() const {
  return static_cast<std::size_t>(std::count(kept_.begin(), kept_.end(), std::uint8_t{1}));
}

double SamplingMask::acceleration() const {
  const auto n = count_kept();
  if (n == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(rows_ * cols_) / static_cast<double>(n);
}

std::string SamplingMask::describe() const {
  std::ostringstream os;
  os << to_string(kind_);
  if (kind_ == PatternKind::Uniform1d) os << " R=" << accel_rows_;
  if (kind_ == PatternKind::Uniform2d) os << " R=" << accel_rows_ << "x" << accel_cols_;
  if (kind_ == PatternKind::Full) return os.str();
  os << " acs=" << acs_rows_;
  if (kind_ == PatternKind::Uniform2d && acs_cols_ != acs_rows_) os << "x" << acs_cols_;
  return os.str();
}

KSpaceData::KSpaceData(CoilArray samples, SamplingMask mask) : samples_(std::move(samples)), mask_(std::move(mask)) {
  if (samples_.rows() != mask_.rows() || samples_.cols() != mask_.cols()) {
    throw DimensionMismatch("KSpaceData: samples " + shape(samples_.rows(), samples_.cols()) + " vs mask " +
                            shape(mask_.rows(), mask_.cols()));
  }
  if (samples_.num_coils() == 0) throw DimensionMismatch("KSpaceData: zero coils");
  for (std::size_t l = 0; l < samples_.num_coils(); ++l) {
    auto plane = samples_.coil(l);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      if (!mask_.kept(i) && plane[i] != Complex{}) {
        throw Error("KSpaceData: nonzero sample at an unsampled location");
      }
    }
  }
}

KSpaceData KSpaceData::masked(CoilArray samples, SamplingMask mask) {
  if (samples.rows() == mask.rows() && samples.cols() == mask.cols()) {
    for (std::size_t l = 0; l < samples.num_coils(); ++l) {
      auto plane = samples.coil(l);
      for (std::size_t i = 0; i < plane.size(); ++i) {
        if (!mask.kept(i)) plane[i] = Complex{};
      }
    }
  }
  return KSpaceData(std::move(samples), std::move(mask));
}

SensitivityMaps::SensitivityMaps(CoilArray values, std::vector<std::uint8_t> support)
  : values_(std::move(values)), support_(std::move(support)) {
  const auto n = values_.plane_size();
  if (support_.size() != n) throw DimensionMismatch("SensitivityMaps: support size mismatch");
  if (values_.num_coils() == 0) throw DimensionMismatch("SensitivityMaps: zero coils");
  for (std::size_t i = 0; i < n; ++i) {
    double energy = 0.0;
    for (std::size_t l = 0; l < values_.num_coils(); ++l) energy += std::norm(values_.coil(l)[i]);
    if (support_[i]) {
      if (std::abs(energy - 1.0) > 1e-6) throw Error("SensitivityMaps: maps not normalized on support");
    } else if (energy != 0.0) {
      throw Error("SensitivityMaps: nonzero value off support");
    }
  }
}

SensitivityMaps SensitivityMaps::normalize(const CoilArray &raw, double support_threshold) {
  CoilArray out(raw.num_coils(), raw.rows(), raw.cols());
  std::vector<std::uint8_t> support(raw.plane_size(), 0);
  for (std::size_t i = 0; i < raw.plane_size(); ++i) {
    double energy = 0.0;
    for (std::size_t l = 0; l < raw.num_coils(); ++l) energy += std::norm(raw.coil(l)[i]);
    if (energy > support_threshold) {
      support[i] = 1;
      const double inv = 1.0 / std::sqrt(energy);
      for (std::size_t l = 0; l < raw.num_coils(); ++l) out.coil(l)[i] = raw.coil(l)[i] * inv;
    }
  }
  return SensitivityMaps(std::move(out), std::move(support));
}

SensitivityMaps SensitivityMaps::uniform(std::size_t rows, std::size_t cols) {
  CoilArray v(1, rows, cols, std::vector<Complex>(rows * cols, Complex{1.0, 0.0}));
  return SensitivityMaps(std::move(v), std::vector<std::uint8_t>(rows * cols, 1));
}

TwoChannelTensor::TwoChannelTensor(std::size_t r, std::size_t c, std::vector<double> ch0, std::vector<double> ch1)
  : rows(r), cols(c), channel0(std::move(ch0)), channel1(std::move(ch1)) {
  if (channel0.size() != r * c || channel1.size() != r * c) {
    throw DimensionMismatch("TwoChannelTensor " + shape(r, c) + ": channel length mismatch");
  }
}

TwoChannelTensor image_to_channels(const Image &x) {
  TwoChannelTensor t(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    t.channel0[i] = x[i].real();
    t.channel1[i] = x[i].imag();
  }
  return t;
}

Image channels_to_image(const TwoChannelTensor &t) {
  if (t.channel0.size() != t.rows * t.cols || t.channel1.size() != t.rows * t.cols) {
    throw DimensionMismatch("channels_to_image: channel length mismatch");
  }
  std::vector<Complex> v(t.rows * t.cols);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = Complex(t.channel0[i], t.channel1[i]);
  return Image(t.rows, t.cols, std::move(v));
}

Complex inner(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw DimensionMismatch("inner: length mismatch");
  Complex acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

double norm2(std::span<const Complex> a) {
  double acc = 0.0;
  for (const auto &v : a) acc += std::norm(v);
  return std::sqrt(acc);
}

Image magnitude(const Image &x) {
  Image out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::abs(x[i]);
  return out;
}

Image axpy(const Image &a, Complex alpha, const Image &b) {
  if (!a.same_shape(b)) throw DimensionMismatch("axpy: shape mismatch");
  Image out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + alpha * b[i];
  return out;
}

Image scaled(const Image &a, Complex alpha) {
  Image out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = alpha * a[i];
  return out;
}

Image operator+(const Image &a, const Image &b) {
  if (!a.same_shape(b)) throw DimensionMismatch("operator+: shape mismatch");
  Image out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Image operator-(const Image &a, const Image &b) {
  if (!a.same_shape(b)) throw DimensionMismatch("operator-: shape mismatch");
  Image out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

} // namespace pnpmri

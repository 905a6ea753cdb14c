#include "pnpmri/operators.hpp"

#include "pnpmri/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace pnpmri {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
public:
  static PlanCache &instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t rows, std::size_t cols, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(rows, cols, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> in(rows * cols), out(rows * cols);
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols),
                                      reinterpret_cast<fftw_complex *>(in.data()),
                                      reinterpret_cast<fftw_complex *>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto &[key, plan] : plans_) fftw_destroy_plan(plan);
  }

private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

// Centering by index shifts: ifftshift on the way in, fftshift on the way out.
void centered_transform(std::span<const Complex> in, std::span<Complex> out, std::size_t rows, std::size_t cols,
                        int sign) {
  const std::size_t hr = rows / 2;
  const std::size_t hc = cols / 2;
  std::vector<Complex> a(rows * cols), b(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t sr = (r + hr) % rows;
    for (std::size_t c = 0; c < cols; ++c) {
      a[r * cols + c] = in[sr * cols + (c + hc) % cols];
    }
  }
  fftw_plan plan = PlanCache::instance().get(rows, cols, sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex *>(a.data()), reinterpret_cast<fftw_complex *>(b.data()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows * cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t dr = (r + hr) % rows;
    for (std::size_t c = 0; c < cols; ++c) {
      out[dr * cols + (c + hc) % cols] = b[r * cols + c] * scale;
    }
  }
}

} // namespace

Image dft2_centered(const Image &x) {
  Image out(x.rows(), x.cols());
  if (x.size() == 0) return out;
  centered_transform(x.values(), out.values(), x.rows(), x.cols(), FFTW_FORWARD);
  return out;
}

Image idft2_centered(const Image &k) {
  Image out(k.rows(), k.cols());
  if (k.size() == 0) return out;
  centered_transform(k.values(), out.values(), k.rows(), k.cols(), FFTW_BACKWARD);
  return out;
}

EncodingOperator::EncodingOperator(SensitivityMaps maps, SamplingMask mask)
  : maps_(std::move(maps)), mask_(std::move(mask)) {
  if (maps_.rows() != mask_.rows() || maps_.cols() != mask_.cols()) {
    throw DimensionMismatch("EncodingOperator: maps " + std::to_string(maps_.rows()) + "x" +
                            std::to_string(maps_.cols()) + " vs mask " + std::to_string(mask_.rows()) + "x" +
                            std::to_string(mask_.cols()));
  }
}

void EncodingOperator::check_image(const Image &x, const char *what) const {
  if (x.rows() != rows() || x.cols() != cols()) {
    throw DimensionMismatch(std::string(what) + ": image " + std::to_string(x.rows()) + "x" +
                            std::to_string(x.cols()) + " vs operator " + std::to_string(rows()) + "x" +
                            std::to_string(cols()));
  }
}

KSpaceData EncodingOperator::forward(const Image &x) const {
  check_image(x, "forward");
  const auto n = x.size();
  CoilArray k(num_coils(), rows(), cols());
  std::vector<Complex> weighted(n);
  for (std::size_t l = 0; l < num_coils(); ++l) {
    auto s = maps_.values().coil(l);
    for (std::size_t i = 0; i < n; ++i) weighted[i] = s[i] * x[i];
    auto plane = k.coil(l);
    centered_transform(weighted, plane, rows(), cols(), FFTW_FORWARD);
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask_.kept(i)) plane[i] = Complex{};
    }
  }
  return KSpaceData(std::move(k), mask_);
}

Image EncodingOperator::adjoint(const KSpaceData &d) const {
  if (d.rows() != rows() || d.cols() != cols() || d.num_coils() != num_coils()) {
    throw DimensionMismatch("adjoint: data " + std::to_string(d.num_coils()) + "x" + std::to_string(d.rows()) + "x" +
                            std::to_string(d.cols()) + " vs operator " + std::to_string(num_coils()) + "x" +
                            std::to_string(rows()) + "x" + std::to_string(cols()));
  }
  const auto n = rows() * cols();
  Image out(rows(), cols());
  std::vector<Complex> masked(n), coil_img(n);
  for (std::size_t l = 0; l < num_coils(); ++l) {
    auto plane = d.samples().coil(l);
    for (std::size_t i = 0; i < n; ++i) masked[i] = mask_.kept(i) ? plane[i] : Complex{};
    centered_transform(masked, coil_img, rows(), cols(), FFTW_BACKWARD);
    auto s = maps_.values().coil(l);
    for (std::size_t i = 0; i < n; ++i) out[i] += std::conj(s[i]) * coil_img[i];
  }
  return out;
}

Image EncodingOperator::normal(const Image &x) const {
  check_image(x, "normal");
  const auto n = x.size();
  Image out(rows(), cols());
  std::vector<Complex> buf(n), k(n);
  for (std::size_t l = 0; l < num_coils(); ++l) {
    auto s = maps_.values().coil(l);
    for (std::size_t i = 0; i < n; ++i) buf[i] = s[i] * x[i];
    centered_transform(buf, k, rows(), cols(), FFTW_FORWARD);
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask_.kept(i)) k[i] = Complex{};
    }
    centered_transform(k, buf, rows(), cols(), FFTW_BACKWARD);
    for (std::size_t i = 0; i < n; ++i) out[i] += std::conj(s[i]) * buf[i];
  }
  return out;
}

Image zero_filled_recon(const EncodingOperator &op, const KSpaceData &d) { return op.adjoint(d); }

void apply_mask(const SamplingMask &mask, CoilArray &k) {
  if (k.rows() != mask.rows() || k.cols() != mask.cols()) throw DimensionMismatch("apply_mask: shape mismatch");
  for (std::size_t l = 0; l < k.num_coils(); ++l) {
    auto plane = k.coil(l);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      if (!mask.kept(i)) plane[i] = Complex{};
    }
  }
}

} // namespace pnpmri

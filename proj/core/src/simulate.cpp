#include "pnpmri/simulate.hpp"

#include "pnpmri/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

namespace pnpmri {

namespace {

struct Ellipse {
  double intensity, a, b, x0, y0, phi_deg;
};

// Modified Shepp-Logan (Toft) parameters.
constexpr Ellipse kSheppLogan[10] = {
    {1.0, 0.6900, 0.9200, 0.00, 0.0000, 0.0},   {-0.8, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0000, -18.0}, {-0.2, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
    {0.1, 0.2100, 0.2500, 0.00, 0.3500, 0.0},    {0.1, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
    {0.1, 0.0460, 0.0460, 0.00, -0.1000, 0.0},   {0.1, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
    {0.1, 0.0230, 0.0230, 0.00, -0.6060, 0.0},   {0.1, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
};

double grid_x(std::size_t c, std::size_t cols) {
  return (2.0 * static_cast<double>(c) + 1.0 - static_cast<double>(cols)) / static_cast<double>(cols);
}
double grid_y(std::size_t r, std::size_t rows) {
  return (static_cast<double>(rows) - 2.0 * static_cast<double>(r) - 1.0) / static_cast<double>(rows);
}

Image rasterize(const std::vector<Ellipse> &ellipses, std::size_t rows, std::size_t cols) {
  Image img(rows, cols);
  for (const auto &e : ellipses) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    const double cp = std::cos(phi), sp = std::sin(phi);
    for (std::size_t r = 0; r < rows; ++r) {
      const double y = grid_y(r, rows) - e.y0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double x = grid_x(c, cols) - e.x0;
        const double u = (x * cp + y * sp) / e.a;
        const double v = (-x * sp + y * cp) / e.b;
        if (u * u + v * v <= 1.0) img(r, c) += e.intensity;
      }
    }
  }
  for (auto &v : img.values()) v = std::clamp(v.real(), 0.0, 1.0);
  return img;
}

double uniform(std::mt19937_64 &rng, double lo, double hi) {
  return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(n + 1)));
  }
  return w;
}

} // namespace

std::string to_string(PhantomKind kind) {
  return kind == PhantomKind::SheppLogan ? "shepp-logan" : "random-ellipses";
}

PhantomKind phantom_kind_from_string(const std::string &name) {
  if (name == "shepp-logan") return PhantomKind::SheppLogan;
  if (name == "random-ellipses") return PhantomKind::RandomEllipses;
  throw Error("unknown phantom kind '" + name + "'");
}

void PhantomSpec::validate() const {
  if (rows < 16 || cols < 16) throw InvalidGeometry("PhantomSpec: dimensions must be >= 16");
  if (jitter < 0.0) throw Error("PhantomSpec: jitter must be nonnegative");
}

Image make_phantom(const PhantomSpec &spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::vector<Ellipse> ellipses;
  if (spec.kind == PhantomKind::SheppLogan) {
    ellipses.assign(std::begin(kSheppLogan), std::end(kSheppLogan));
    if (spec.jitter > 0.0) {
      const double j = spec.jitter;
      for (std::size_t k = 0; k < ellipses.size(); ++k) {
        auto &e = ellipses[k];
        // The outer pair stays concentric so the skull rim keeps its shape.
        const double scale = 1.0 + 0.1 * j * uniform(rng, -1.0, 1.0);
        if (k >= 2) {
          e.x0 += 0.04 * j * uniform(rng, -1.0, 1.0);
          e.y0 += 0.04 * j * uniform(rng, -1.0, 1.0);
          e.a *= 1.0 + 0.2 * j * uniform(rng, -1.0, 1.0);
          e.b *= 1.0 + 0.2 * j * uniform(rng, -1.0, 1.0);
          e.phi_deg += 15.0 * j * uniform(rng, -1.0, 1.0);
          e.intensity *= 1.0 + 0.5 * j * uniform(rng, -1.0, 1.0);
        } else {
          e.a *= scale;
          e.b *= scale;
        }
      }
      // Keep the inner ellipse strictly inside the outer one.
      ellipses[1].a = std::min(ellipses[1].a, ellipses[0].a * 0.96);
      ellipses[1].b = std::min(ellipses[1].b, ellipses[0].b * 0.95);
    }
  } else {
    for (std::size_t k = 0; k < spec.num_ellipses; ++k) {
      Ellipse e{};
      e.x0 = uniform(rng, -0.6, 0.6);
      e.y0 = uniform(rng, -0.6, 0.6);
      e.a = uniform(rng, 0.05, 0.4);
      e.b = uniform(rng, 0.05, 0.4);
      e.phi_deg = uniform(rng, 0.0, 180.0);
      e.intensity = uniform(rng, 0.1, 0.6);
      ellipses.push_back(e);
    }
  }
  return rasterize(ellipses, spec.rows, spec.cols);
}

SensitivityMaps make_sensitivity_maps(std::size_t num_coils, std::size_t rows, std::size_t cols,
                                      std::uint64_t rng_seed) {
  if (num_coils < 1) throw InvalidGeometry("make_sensitivity_maps: need at least one coil");
  std::mt19937_64 rng(rng_seed);
  constexpr double width = 0.7;
  CoilArray raw(num_coils, rows, cols);
  for (std::size_t l = 0; l < num_coils; ++l) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(l) / static_cast<double>(num_coils);
    const double cx = std::cos(theta), cy = std::sin(theta);
    const double gx = uniform(rng, -0.5, 0.5) * std::numbers::pi;
    const double gy = uniform(rng, -0.5, 0.5) * std::numbers::pi;
    const double phase0 = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    for (std::size_t r = 0; r < rows; ++r) {
      const double y = grid_y(r, rows);
      for (std::size_t c = 0; c < cols; ++c) {
        const double x = grid_x(c, cols);
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double mag = std::exp(-d2 / (2.0 * width * width));
        raw(l, r, c) = std::polar(mag, phase0 + gx * x + gy * y);
      }
    }
  }
  return SensitivityMaps::normalize(raw);
}

std::string MaskSpec::describe() const {
  std::ostringstream os;
  os << to_string(pattern) << " R=" << accel_rows;
  if (pattern == PatternKind::Uniform2d) os << "x" << accel_cols;
  os << " acs=" << acs;
  return os.str();
}

SamplingMask make_mask(std::size_t rows, std::size_t cols, const MaskSpec &spec) {
  if (rows == 0 || cols == 0) throw InvalidGeometry("make_mask: empty grid");
  if (spec.accel_rows < 1 || spec.accel_cols < 1) throw InvalidGeometry("make_mask: acceleration must be >= 1");
  const bool two_d = spec.pattern == PatternKind::Uniform2d;
  if (spec.acs > rows || (two_d && spec.acs > cols)) throw InvalidGeometry("make_mask: ACS block exceeds grid");
  const std::size_t ry = spec.accel_rows;
  const std::size_t rx = two_d ? spec.accel_cols : 1;
  const std::size_t acs_rows = spec.acs;
  const std::size_t acs_cols = two_d ? spec.acs : cols;

  if (spec.pattern == PatternKind::Full || (ry == 1 && rx == 1)) {
    return SamplingMask(rows, cols, std::vector<std::uint8_t>(rows * cols, 1), acs_rows, acs_cols, PatternKind::Full,
                        1, 1);
  }
  std::vector<std::uint8_t> kept(rows * cols, 0);
  const std::size_t r0 = rows / 2 - acs_rows / 2;
  const std::size_t c0 = cols / 2 - acs_cols / 2;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const bool lattice = r % ry == 0 && c % rx == 0;
      const bool acs = acs_rows > 0 && r >= r0 && r < r0 + acs_rows && c >= c0 && c < c0 + acs_cols;
      kept[r * cols + c] = (lattice || acs) ? 1 : 0;
    }
  }
  return SamplingMask(rows, cols, std::move(kept), acs_rows, acs_cols, spec.pattern, ry, rx);
}

KSpaceData simulate_acquisition(const Image &x, const SensitivityMaps &maps, const SamplingMask &mask,
                                const NoiseModel &noise) {
  if (noise.sigma < 0.0) throw Error("NoiseModel: sigma must be nonnegative");
  const EncodingOperator op(maps, mask);
  KSpaceData clean = op.forward(x);
  if (noise.sigma == 0.0) return clean;
  CoilArray k = clean.samples();
  std::mt19937_64 rng(noise.rng_seed);
  std::normal_distribution<double> gauss(0.0, noise.sigma);
  for (std::size_t l = 0; l < k.num_coils(); ++l) {
    auto plane = k.coil(l);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      if (mask.kept(i)) plane[i] += Complex(re, im);
    }
  }
  return KSpaceData(std::move(k), mask);
}

SensitivityMaps estimate_maps_lowres(const KSpaceData &d) {
  const SamplingMask &mask = d.mask();
  if (mask.acs_rows() == 0 || mask.acs_cols() == 0) throw InsufficientAcs("estimate_maps_lowres: mask has no ACS block");
  const std::size_t rows = d.rows(), cols = d.cols();
  const auto wr = hann(mask.acs_rows());
  const auto wc = hann(mask.acs_cols());
  const std::size_t r0 = mask.acs_row_begin(), c0 = mask.acs_col_begin();
  CoilArray lowres(d.num_coils(), rows, cols);
  for (std::size_t l = 0; l < d.num_coils(); ++l) {
    Image block(rows, cols);
    for (std::size_t r = 0; r < mask.acs_rows(); ++r) {
      for (std::size_t c = 0; c < mask.acs_cols(); ++c) {
        block(r0 + r, c0 + c) = d.samples()(l, r0 + r, c0 + c) * (wr[r] * wc[c]);
      }
    }
    lowres.set_coil(l, idft2_centered(block));
  }
  // RSS below 1e-8 is off support, i.e. energy below 1e-16.
  SensitivityMaps maps = SensitivityMaps::normalize(lowres, 1e-16);
  if (std::none_of(maps.support().begin(), maps.support().end(), [](std::uint8_t s) { return s != 0; })) {
    throw InsufficientAcs("estimate_maps_lowres: ACS block carries no signal");
  }
  return maps;
}

TrainingPair make_training_pair(const Image &noisy, const Image &clean) {
  if (!noisy.same_shape(clean)) throw DimensionMismatch("make_training_pair: shape mismatch");
  double peak = 0.0;
  for (const auto &v : noisy.values()) peak = std::max(peak, std::abs(v));
  const double s = std::max(peak, 1e-12);
  return {image_to_channels(scaled(noisy, 1.0 / s)), image_to_channels(scaled(clean, 1.0 / s))};
}

std::vector<TrainingPair> make_denoiser_dataset(const DatasetSpec &spec) {
  if (spec.count == 0) throw EmptyDataset("make_denoiser_dataset: count is zero");
  if (spec.noise_sigmas.empty()) throw Error("make_denoiser_dataset: no noise levels");
  std::vector<TrainingPair> pairs;
  pairs.reserve(spec.count);
  std::mt19937_64 rng(spec.seed);
  std::optional<SensitivityMaps> maps;
  std::optional<SamplingMask> mask;
  for (std::size_t k = 0; k < spec.count; ++k) {
    PhantomSpec ps = spec.phantom;
    ps.rng_seed = spec.phantom.rng_seed + k;
    const Image clean = make_phantom(ps);
    const std::uint64_t pair_seed = rng();
    if (spec.aliased_every > 0 && k % spec.aliased_every == spec.aliased_every - 1) {
      if (!maps) {
        maps = make_sensitivity_maps(spec.num_coils, ps.rows, ps.cols, spec.seed + 1);
        mask = make_mask(ps.rows, ps.cols, spec.mask);
      }
      const KSpaceData d = simulate_acquisition(clean, *maps, *mask, {spec.acquisition_sigma, pair_seed});
      pairs.push_back(make_training_pair(zero_filled_recon(EncodingOperator(*maps, *mask), d), clean));
    } else {
      const double sigma = spec.noise_sigmas[k % spec.noise_sigmas.size()];
      std::mt19937_64 noise_rng(pair_seed);
      std::normal_distribution<double> gauss(0.0, sigma);
      Image noisy = clean;
      for (auto &v : noisy.values()) {
        const double re = gauss(noise_rng);
        const double im = gauss(noise_rng);
        v += Complex(re, im);
      }
      pairs.push_back(make_training_pair(noisy, clean));
    }
  }
  return pairs;
}

} // namespace pnpmri

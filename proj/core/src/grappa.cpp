#include "pnpmri/grappa.hpp"

#include "pnpmri/error.hpp"
#include "pnpmri/operators.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace pnpmri {

namespace {

std::size_t wrap(long i, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

// One row-direction pass: fills unknown entries in rows off the lattice, at
// columns that are multiples of col_stride.
void fill_rows(CoilArray &k, std::vector<std::uint8_t> &known, const GrappaWeights &w, std::size_t col_stride) {
  const auto &g = w.geometry;
  const std::size_t rows = k.rows(), cols = k.cols(), coils = k.num_coils();
  const std::size_t R = g.acceleration;
  const std::size_t U = g.unknowns(coils);
  std::vector<Complex> src(U);
  std::vector<std::uint8_t> filled(known.size(), 0);
  for (std::size_t t = 0; t < rows; ++t) {
    const std::size_t delta = t % R;
    if (delta == 0) continue;
    const long r0 = static_cast<long>(t - delta);
    for (std::size_t c = 0; c < cols; c += col_stride) {
      if (known[t * cols + c]) continue;
      for (std::size_t l = 0; l < coils; ++l) {
        for (std::size_t j = 0; j < g.num_source_lines; ++j) {
          const std::size_t sr = wrap(r0 + g.source_row_offset(j), rows);
          for (std::size_t m = 0; m < g.kernel_readout_width; ++m) {
            const std::size_t sc = wrap(static_cast<long>(c) + g.readout_offset(m), cols);
            if (!known[sr * cols + sc]) {
              throw InvalidGeometry("grappa: source sample (" + std::to_string(sr) + ", " + std::to_string(sc) +
                                    ") was not acquired; mask does not match kernel geometry");
            }
            src[(l * g.num_source_lines + j) * g.kernel_readout_width + m] = k(l, sr, sc);
          }
        }
      }
      const auto &wd = w.per_offset[delta - 1];
      for (std::size_t tc = 0; tc < coils; ++tc) {
        Complex acc{};
        const Complex *wt = wd.data() + tc * U;
        for (std::size_t u = 0; u < U; ++u) acc += wt[u] * src[u];
        k(tc, t, c) = acc;
      }
      filled[t * cols + c] = 1;
    }
  }
  for (std::size_t i = 0; i < known.size(); ++i) known[i] |= filled[i];
}

CoilArray transpose(const CoilArray &k) {
  CoilArray out(k.num_coils(), k.cols(), k.rows());
  for (std::size_t l = 0; l < k.num_coils(); ++l) {
    for (std::size_t r = 0; r < k.rows(); ++r) {
      for (std::size_t c = 0; c < k.cols(); ++c) out(l, c, r) = k(l, r, c);
    }
  }
  return out;
}

std::vector<std::uint8_t> transpose(const std::vector<std::uint8_t> &m, std::size_t rows, std::size_t cols) {
  std::vector<std::uint8_t> out(m.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = m[r * cols + c];
  }
  return out;
}

GrappaWeights calibrate_impl(const CoilArray &acs, const GrappaKernelGeometry &geom, double tikhonov,
                             std::size_t row_origin) {
  geom.validate();
  if (tikhonov < 0.0) throw Error("grappa_calibrate: tikhonov must be nonnegative");
  const std::size_t coils = acs.num_coils();
  const std::size_t U = geom.unknowns(coils);
  const std::size_t R = geom.acceleration;
  const long ar = static_cast<long>(acs.rows()), ac = static_cast<long>(acs.cols());

  long lo_row = 0, hi_row = 0;
  for (std::size_t j = 0; j < geom.num_source_lines; ++j) {
    lo_row = std::min(lo_row, geom.source_row_offset(j));
    hi_row = std::max(hi_row, geom.source_row_offset(j));
  }
  const long lo_col = geom.readout_offset(0);
  const long hi_col = geom.readout_offset(geom.kernel_readout_width - 1);

  GrappaWeights w;
  w.geometry = geom;
  w.num_coils = coils;
  w.per_offset.resize(R - 1);
  for (std::size_t delta = 1; delta < R; ++delta) {
    std::vector<std::pair<long, long>> windows; // (lattice row r0, column)
    for (long r0 = -lo_row; r0 + hi_row < ar; ++r0) {
      const long t = r0 + static_cast<long>(delta);
      if (t >= ar) continue;
      if (geom.calibration == CalibrationSampling::LatticeAligned &&
          (static_cast<long>(row_origin) + r0) % static_cast<long>(R) != 0) {
        continue;
      }
      for (long c = -lo_col; c + hi_col < ac; ++c) windows.emplace_back(r0, c);
    }
    if (windows.size() < U) {
      throw InsufficientAcs("grappa_calibrate: " + std::to_string(windows.size()) + " calibration windows for " +
                            std::to_string(U) + " unknowns; enlarge the ACS block");
    }
    Eigen::MatrixXcd A(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(U));
    Eigen::MatrixXcd B(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(coils));
    for (std::size_t e = 0; e < windows.size(); ++e) {
      const auto [r0, c] = windows[e];
      const auto row = static_cast<Eigen::Index>(e);
      for (std::size_t l = 0; l < coils; ++l) {
        for (std::size_t j = 0; j < geom.num_source_lines; ++j) {
          const auto sr = static_cast<std::size_t>(r0 + geom.source_row_offset(j));
          for (std::size_t m = 0; m < geom.kernel_readout_width; ++m) {
            const auto sc = static_cast<std::size_t>(c + geom.readout_offset(m));
            A(row, static_cast<Eigen::Index>((l * geom.num_source_lines + j) * geom.kernel_readout_width + m)) =
                acs(l, sr, sc);
          }
        }
        B(row, static_cast<Eigen::Index>(l)) = acs(l, static_cast<std::size_t>(r0) + delta, static_cast<std::size_t>(c));
      }
    }
    Eigen::MatrixXcd X;
    const double ridge = tikhonov * A.squaredNorm() / static_cast<double>(U);
    if (ridge > 0.0) {
      Eigen::MatrixXcd As(A.rows() + A.cols(), A.cols());
      As << A, std::sqrt(ridge) * Eigen::MatrixXcd::Identity(A.cols(), A.cols());
      Eigen::MatrixXcd Bs(B.rows() + A.cols(), B.cols());
      Bs << B, Eigen::MatrixXcd::Zero(A.cols(), B.cols());
      X = As.colPivHouseholderQr().solve(Bs);
    } else {
      X = A.colPivHouseholderQr().solve(B);
    }
    auto &out = w.per_offset[delta - 1];
    out.resize(coils * U);
    for (std::size_t tc = 0; tc < coils; ++tc) {
      for (std::size_t u = 0; u < U; ++u) {
        out[tc * U + u] = X(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(tc));
      }
    }
  }
  return w;
}

} // namespace

void GrappaKernelGeometry::validate() const {
  if (num_source_lines < 2) throw InvalidGeometry("GRAPPA: num_source_lines must be >= 2");
  if (kernel_readout_width % 2 == 0) throw InvalidGeometry("GRAPPA: kernel_readout_width must be odd");
  if (acceleration < 2) throw InvalidGeometry("GRAPPA: acceleration must be >= 2");
  if (readout_spacing < 1) throw InvalidGeometry("GRAPPA: readout_spacing must be >= 1");
}

long GrappaKernelGeometry::source_row_offset(std::size_t j) const {
  return (static_cast<long>(j) + 1 - static_cast<long>(num_source_lines / 2)) * static_cast<long>(acceleration);
}

long GrappaKernelGeometry::readout_offset(std::size_t m) const {
  return (static_cast<long>(m) - static_cast<long>(kernel_readout_width / 2)) * static_cast<long>(readout_spacing);
}

Complex GrappaWeights::weight(std::size_t delta, std::size_t target_coil, std::size_t source_coil, std::size_t line,
                              std::size_t tap) const {
  const std::size_t U = geometry.unknowns(num_coils);
  return per_offset[delta - 1][target_coil * U +
                               (source_coil * geometry.num_source_lines + line) * geometry.kernel_readout_width + tap];
}

Complex &GrappaWeights::weight(std::size_t delta, std::size_t target_coil, std::size_t source_coil, std::size_t line,
                               std::size_t tap) {
  const std::size_t U = geometry.unknowns(num_coils);
  return per_offset[delta - 1][target_coil * U +
                               (source_coil * geometry.num_source_lines + line) * geometry.kernel_readout_width + tap];
}

CoilArray extract_acs(const KSpaceData &d) {
  const auto &m = d.mask();
  if (m.acs_rows() == 0 || m.acs_cols() == 0) throw InsufficientAcs("extract_acs: mask has no ACS block");
  CoilArray out(d.num_coils(), m.acs_rows(), m.acs_cols());
  const std::size_t r0 = m.acs_row_begin(), c0 = m.acs_col_begin();
  for (std::size_t l = 0; l < d.num_coils(); ++l) {
    for (std::size_t r = 0; r < m.acs_rows(); ++r) {
      for (std::size_t c = 0; c < m.acs_cols(); ++c) out(l, r, c) = d.samples()(l, r0 + r, c0 + c);
    }
  }
  return out;
}

GrappaWeights grappa_calibrate(const CoilArray &acs, const GrappaKernelGeometry &geom, double tikhonov,
                               std::size_t row_origin) {
  return calibrate_impl(acs, geom, tikhonov, row_origin);
}

KSpaceData grappa_apply(const KSpaceData &d, const GrappaWeights &w, const GrappaKernelGeometry &geom) {
  geom.validate();
  const auto &mask = d.mask();
  const SamplingMask full = SamplingMask(d.rows(), d.cols(), std::vector<std::uint8_t>(d.rows() * d.cols(), 1),
                                         mask.acs_rows(), mask.acs_cols(), PatternKind::Full, 1, 1);
  if (mask.is_full()) return KSpaceData(d.samples(), full);
  if (mask.pattern_kind() != PatternKind::Uniform1d) {
    throw InvalidGeometry("grappa_apply: expects a uniform-1d mask, got " + mask.describe());
  }
  if (mask.accel_rows() != geom.acceleration || w.geometry.acceleration != geom.acceleration) {
    throw InvalidGeometry("grappa_apply: mask acceleration " + std::to_string(mask.accel_rows()) +
                          " does not match kernel acceleration " + std::to_string(geom.acceleration));
  }
  if (d.rows() % geom.acceleration != 0) throw InvalidGeometry("grappa_apply: rows must be a multiple of R");
  if (w.num_coils != d.num_coils()) throw DimensionMismatch("grappa_apply: weights calibrated for another coil count");
  CoilArray k = d.samples();
  std::vector<std::uint8_t> known(mask.bits().begin(), mask.bits().end());
  fill_rows(k, known, w, 1);
  return KSpaceData(std::move(k), full);
}

CoilArray coil_images(const CoilArray &kspace) {
  CoilArray out(kspace.num_coils(), kspace.rows(), kspace.cols());
  for (std::size_t l = 0; l < kspace.num_coils(); ++l) out.set_coil(l, idft2_centered(kspace.coil_image(l)));
  return out;
}

Image coil_combine_rss(const CoilArray &images) {
  Image out(images.rows(), images.cols());
  for (std::size_t i = 0; i < images.plane_size(); ++i) {
    double acc = 0.0;
    for (std::size_t l = 0; l < images.num_coils(); ++l) acc += std::norm(images.coil(l)[i]);
    out[i] = std::sqrt(acc);
  }
  return out;
}

Image coil_combine_rss(const std::vector<Image> &images) {
  if (images.empty()) throw DimensionMismatch("coil_combine_rss: no coil images");
  CoilArray stacked(images.size(), images.front().rows(), images.front().cols());
  for (std::size_t l = 0; l < images.size(); ++l) stacked.set_coil(l, images[l]);
  return coil_combine_rss(stacked);
}

Image grappa_reconstruct(const KSpaceData &d, const GrappaOptions &opts) {
  const auto &mask = d.mask();
  if (mask.is_full()) return coil_combine_rss(coil_images(d.samples()));

  GrappaKernelGeometry geom;
  geom.num_source_lines = opts.num_source_lines;
  geom.kernel_readout_width = opts.kernel_readout_width;
  geom.calibration = opts.calibration;

  if (mask.pattern_kind() == PatternKind::Uniform1d) {
    geom.acceleration = mask.accel_rows();
    const auto w = calibrate_impl(extract_acs(d), geom, opts.tikhonov, mask.acs_row_begin());
    return coil_combine_rss(coil_images(grappa_apply(d, w, geom).samples()));
  }
  if (mask.pattern_kind() != PatternKind::Uniform2d) throw InvalidGeometry("grappa: unsupported mask " + mask.describe());

  const std::size_t rows = d.rows(), cols = d.cols();
  const std::size_t ry = mask.accel_rows(), rx = mask.accel_cols();
  if (rows % ry != 0 || cols % rx != 0) throw InvalidGeometry("grappa: grid must be a multiple of the acceleration");
  CoilArray k = d.samples();
  std::vector<std::uint8_t> known(mask.bits().begin(), mask.bits().end());
  const CoilArray acs = extract_acs(d);

  if (ry > 1) {
    GrappaKernelGeometry g1 = geom;
    g1.acceleration = ry;
    g1.readout_spacing = rx;
    const auto w1 = calibrate_impl(acs, g1, opts.tikhonov, mask.acs_row_begin());
    fill_rows(k, known, w1, rx);
  }
  if (rx > 1) {
    GrappaKernelGeometry g2 = geom;
    g2.acceleration = rx;
    g2.readout_spacing = 1;
    const auto w2 = calibrate_impl(transpose(acs), g2, opts.tikhonov, mask.acs_col_begin());
    CoilArray kt = transpose(k);
    auto known_t = transpose(known, rows, cols);
    fill_rows(kt, known_t, w2, 1);
    k = transpose(kt);
  }
  return coil_combine_rss(coil_images(k));
}

} // namespace pnpmri

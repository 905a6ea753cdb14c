#pragma once

#include "pnpmri/cnn.hpp"
#include "pnpmri/grappa.hpp"
#include "pnpmri/operators.hpp"
#include "pnpmri/simulate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>

namespace pnpmri::oracle {

using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;

inline Image random_image(std::size_t rows, std::size_t cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  Image x(rows, cols);
  for (auto &v : x.values()) v = Complex(g(rng), g(rng));
  return x;
}

inline CoilArray random_coils(std::size_t coils, std::size_t rows, std::size_t cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  CoilArray a(coils, rows, cols);
  for (auto &v : a.values()) v = Complex(g(rng), g(rng));
  return a;
}

/// Random smooth-free maps: arbitrary complex values then normalized.
inline SensitivityMaps random_maps(std::size_t coils, std::size_t rows, std::size_t cols, std::mt19937_64 &rng) {
  return SensitivityMaps::normalize(random_coils(coils, rows, cols, rng));
}

/// Uniform-1d pattern with an ACS band.
inline SamplingMask uniform_mask(std::size_t rows, std::size_t cols, std::size_t r, std::size_t acs) {
  MaskSpec spec;
  spec.pattern = PatternKind::Uniform1d;
  spec.accel_rows = r;
  spec.acs = acs;
  return make_mask(rows, cols, spec);
}

inline DenseVector to_dense(const Image &x) {
  DenseVector v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = x[i];
  return v;
}

inline Image from_dense(const DenseVector &v, std::size_t rows, std::size_t cols) {
  Image x(rows, cols);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = v(static_cast<Eigen::Index>(i));
  return x;
}

/// Dense E assembled column by column from canonical basis images.
inline DenseMatrix dense_encoding(const EncodingOperator &op) {
  const std::size_t n = op.rows() * op.cols();
  const std::size_t m = op.num_coils() * n;
  DenseMatrix E(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    Image e(op.rows(), op.cols());
    e[j] = 1.0;
    const KSpaceData fe = op.forward(e);
    const auto col = fe.samples().values();
    for (std::size_t i = 0; i < m; ++i) E(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return E;
}

inline DenseVector to_dense(const CoilArray &a) {
  DenseVector v(static_cast<Eigen::Index>(a.values().size()));
  for (std::size_t i = 0; i < a.values().size(); ++i) v(static_cast<Eigen::Index>(i)) = a.values()[i];
  return v;
}

inline double rel_diff(const Image &a, const Image &b) {
  const double nb = norm2(b.values());
  return norm2((a - b).values()) / (nb > 0 ? nb : 1.0);
}

inline double max_abs_diff(const Image &a, const Image &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline nn::Tensor3 random_tensor(std::size_t c, std::size_t r, std::size_t w, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  nn::Tensor3 t(c, r, w);
  for (auto &v : t.data) v = g(rng);
  return t;
}

inline TwoChannelTensor random_two(std::size_t r, std::size_t c, std::mt19937_64 &rng) {
  return to_two_channel(random_tensor(2, r, c, rng));
}

/// Relative error with a floor so tiny gradients compare absolutely.
inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

/// Central difference of a scalar function of one parameter.
inline double central_diff(double &param, const std::function<double()> &f, double h = 1e-5) {
  const double saved = param;
  param = saved + h;
  const double fp = f();
  param = saved - h;
  const double fm = f();
  param = saved;
  return (fp - fm) / (2 * h);
}

inline std::size_t wrap(long i, std::size_t n) { return std::size_t(((i % long(n)) + long(n)) % long(n)); }

// Full k-space whose off-lattice rows are an exact planted combination of
// lattice-row neighbours (circular in both axes).
struct Planted {
  CoilArray full;
  GrappaWeights weights;
};

inline Planted planted_kspace(std::size_t coils, std::size_t rows, std::size_t cols, const GrappaKernelGeometry &g,
                       std::mt19937_64 &rng) {
  std::normal_distribution<double> gauss;
  Planted p;
  p.full = CoilArray(coils, rows, cols);
  p.weights.geometry = g;
  p.weights.num_coils = coils;
  const std::size_t U = g.unknowns(coils);
  p.weights.per_offset.assign(g.acceleration - 1, std::vector<Complex>(coils * U));
  for (auto &off : p.weights.per_offset) {
    for (auto &v : off) v = Complex(gauss(rng), gauss(rng)) * (0.5 / double(U));
  }
  for (std::size_t l = 0; l < coils; ++l) {
    for (std::size_t r = 0; r < rows; r += g.acceleration) {
      for (std::size_t c = 0; c < cols; ++c) p.full(l, r, c) = Complex(gauss(rng), gauss(rng));
    }
  }
  for (std::size_t t = 0; t < rows; ++t) {
    const std::size_t delta = t % g.acceleration;
    if (delta == 0) continue;
    const long r0 = long(t - delta);
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t tc = 0; tc < coils; ++tc) {
        Complex acc{};
        for (std::size_t l = 0; l < coils; ++l) {
          for (std::size_t j = 0; j < g.num_source_lines; ++j) {
            for (std::size_t m = 0; m < g.kernel_readout_width; ++m) {
              acc += p.weights.weight(delta, tc, l, j, m) *
                     p.full(l, wrap(r0 + g.source_row_offset(j), rows), wrap(long(c) + g.readout_offset(m), cols));
            }
          }
        }
        p.full(tc, t, c) = acc;
      }
    }
  }
  return p;
}

inline GrappaKernelGeometry planted_geometry() {
  GrappaKernelGeometry g;
  g.num_source_lines = 2;
  g.kernel_readout_width = 3;
  g.acceleration = 2;
  g.calibration = CalibrationSampling::LatticeAligned;
  return g;
}

} // namespace pnpmri::oracle

#include "pnpmri/metrics.hpp"

#include "pnpmri/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pnpmri {

namespace {

void check_pair(const Image &a, const Image &b, const MetricOptions &opts) {
  if (!a.same_shape(b)) {
    throw DimensionMismatch("metric: reference " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            " vs test " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (!opts.support.empty() && opts.support.size() != a.size()) {
    throw DimensionMismatch("metric: support mask size mismatch");
  }
}

bool included(const MetricOptions &opts, std::size_t i) { return opts.support.empty() || opts.support[i] != 0; }

double dynamic_range(const Image &ref, const Image &test, const MetricOptions &opts) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (!included(opts, i)) continue;
    peak = std::max(peak, ref[i].real());
    if (opts.range == DynamicRange::PairMax) peak = std::max(peak, test[i].real());
  }
  return peak;
}

std::vector<double> gaussian_window(std::size_t radius) {
  std::vector<double> w(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double d = static_cast<double>(k) - static_cast<double>(radius);
    w[k] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += w[k];
  }
  for (auto &v : w) v /= sum;
  return w;
}

// Separable "valid" filtering: output is (rows - 2 rr) x (cols - 2 rc).
std::vector<double> filter_valid(const std::vector<double> &in, std::size_t rows, std::size_t cols,
                                 const std::vector<double> &wr, const std::vector<double> &wc) {
  const std::size_t out_cols = cols - (wc.size() - 1);
  const std::size_t out_rows = rows - (wr.size() - 1);
  std::vector<double> tmp(rows * out_cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < wc.size(); ++k) acc += wc[k] * in[r * cols + c + k];
      tmp[r * out_cols + c] = acc;
    }
  }
  std::vector<double> out(out_rows * out_cols, 0.0);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < wr.size(); ++k) acc += wr[k] * tmp[(r + k) * out_cols + c];
      out[r * out_cols + c] = acc;
    }
  }
  return out;
}

} // namespace

PsnrResult psnr(const Image &reference, const Image &test, const MetricOptions &opts) {
  check_pair(reference, test, opts);
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (!included(opts, i)) continue;
    const double d = reference[i].real() - test[i].real();
    sq += d * d;
    ++n;
  }
  if (n == 0) throw Error("psnr: empty support");
  const double mse = sq / static_cast<double>(n);
  if (mse == 0.0) return {kPsnrCap, true};
  const double peak = dynamic_range(reference, test, opts);
  const double db = 10.0 * std::log10(peak * peak / mse);
  return {std::min(db, kPsnrCap), false};
}

double ssim(const Image &reference, const Image &test, const MetricOptions &opts) {
  check_pair(reference, test, opts);
  const std::size_t rows = reference.rows(), cols = reference.cols();
  if (rows == 0 || cols == 0) throw Error("ssim: empty image");
  double range = dynamic_range(reference, test, opts);
  if (!(range > 0.0)) range = 1.0;
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  const std::size_t rr = std::min<std::size_t>(5, (rows - 1) / 2);
  const std::size_t rc = std::min<std::size_t>(5, (cols - 1) / 2);
  const auto wr = gaussian_window(rr);
  const auto wc = gaussian_window(rc);

  const std::size_t n = rows * cols;
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = reference[i].real();
    y[i] = test[i].real();
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, rows, cols, wr, wc);
  const auto my = filter_valid(y, rows, cols, wr, wc);
  const auto mxx = filter_valid(xx, rows, cols, wr, wc);
  const auto myy = filter_valid(yy, rows, cols, wr, wc);
  const auto mxy = filter_valid(xy, rows, cols, wr, wc);

  const std::size_t out_rows = rows - 2 * rr, out_cols = cols - 2 * rc;
  auto local = [&](std::size_t j) {
    const double mu1 = mx[j], mu2 = my[j];
    const double s1 = mxx[j] - mu1 * mu1;
    const double s2 = myy[j] - mu2 * mu2;
    const double s12 = mxy[j] - mu1 * mu2;
    return ((2.0 * mu1 * mu2 + c1) * (2.0 * s12 + c2)) / ((mu1 * mu1 + mu2 * mu2 + c1) * (s1 + s2 + c2));
  };
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      if (!included(opts, (r + rr) * cols + c + rc)) continue;
      acc += local(r * out_cols + c);
      ++count;
    }
  }
  if (count == 0) {
    // Support lies entirely within the border band; fall back to every window.
    for (std::size_t j = 0; j < out_rows * out_cols; ++j) acc += local(j);
    count = out_rows * out_cols;
  }
  return acc / static_cast<double>(count);
}

} // namespace pnpmri

#include "pnpmri/cnn.hpp"
#include "pnpmri/error.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <numeric>
#include <random>

using namespace pnpmri;
using namespace pnpmri::oracle;
using nn::ConvLayer;
using nn::Tensor3;

namespace {

double dot(const std::vector<double> &a, const std::vector<double> &b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

} // namespace

TEST(Layers, ReflectIndex) {
  EXPECT_EQ(nn::reflect_index(-1, 5), 1u);
  EXPECT_EQ(nn::reflect_index(-2, 5), 2u);
  EXPECT_EQ(nn::reflect_index(5, 5), 3u);
  EXPECT_EQ(nn::reflect_index(6, 5), 2u);
  EXPECT_EQ(nn::reflect_index(2, 5), 2u);
}

TEST(Layers, ReflectPadAdjoint) {
  std::mt19937_64 rng(1);
  const Tensor3 x = random_tensor(2, 5, 6, rng);
  const Tensor3 g = random_tensor(2, 9, 10, rng);
  EXPECT_NEAR(dot(nn::reflect_pad(x, 2).data, g.data), dot(x.data, nn::reflect_pad_backward(g, 5, 6, 2).data), 1e-12);
}

TEST(Layers, PoolUpsampleConcatAdjoints) {
  std::mt19937_64 rng(2);
  const Tensor3 x = random_tensor(3, 6, 8, rng);
  const Tensor3 gp = random_tensor(3, 3, 4, rng);
  EXPECT_NEAR(dot(nn::avg_pool2(x).data, gp.data), dot(x.data, nn::avg_pool2_backward(gp).data), 1e-12);
  const Tensor3 gu = random_tensor(3, 12, 16, rng);
  EXPECT_NEAR(dot(nn::upsample2(x).data, gu.data), dot(x.data, nn::upsample2_backward(gu).data), 1e-12);

  const Tensor3 y = random_tensor(2, 6, 8, rng);
  const Tensor3 cat = nn::concat(x, y);
  EXPECT_EQ(cat.channels, 5u);
  Tensor3 ga, gb;
  nn::concat_backward(cat, 3, ga, gb);
  EXPECT_EQ(ga.data, x.data);
  EXPECT_EQ(gb.data, y.data);
}

TEST(Layers, AvgPoolValues) {
  Tensor3 x(1, 2, 2);
  x.data = {1, 2, 3, 6};
  EXPECT_DOUBLE_EQ(nn::avg_pool2(x).data[0], 3.0);
  EXPECT_THROW(nn::avg_pool2(Tensor3(1, 3, 2)), InvalidGeometry);
}

TEST(Layers, SingleConvGradientIsCorrelationWithResidual) {
  // Loss 1/2 ||k * x - y||^2 on a 3x3 input, one channel, 3x3 kernel.
  std::mt19937_64 rng(3);
  ConvLayer layer(1, 1, 3);
  for (auto &v : layer.weight) v = std::normal_distribution<double>()(rng);
  const Tensor3 x = random_tensor(1, 3, 3, rng);
  const Tensor3 y = random_tensor(1, 3, 3, rng);
  const Tensor3 padded = nn::reflect_pad(x, 1);
  const Tensor3 out = nn::conv_forward_padded(layer, padded);
  Tensor3 res(1, 3, 3);
  for (std::size_t i = 0; i < 9; ++i) res.data[i] = out.data[i] - y.data[i];

  nn::ConvGrad grad{std::vector<double>(9, 0.0), std::vector<double>(1, 0.0)};
  nn::conv_backward(layer, padded, res, grad);

  for (std::size_t ky = 0; ky < 3; ++ky) {
    for (std::size_t kx = 0; kx < 3; ++kx) {
      double expect = 0.0;
      for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
          const auto xr = nn::reflect_index(long(r + ky) - 1, 3);
          const auto xc = nn::reflect_index(long(c + kx) - 1, 3);
          expect += x.at(0, xr, xc) * res.at(0, r, c);
        }
      }
      EXPECT_NEAR(grad.weight[ky * 3 + kx], expect, 1e-12);
    }
  }
  EXPECT_NEAR(grad.bias[0], std::accumulate(res.data.begin(), res.data.end(), 0.0), 1e-12);
}

TEST(Layers, ConvInputGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  ConvLayer layer(2, 3, 3);
  for (auto &v : layer.weight) v = std::normal_distribution<double>()(rng);
  Tensor3 x = random_tensor(2, 5, 4, rng);
  const Tensor3 g = random_tensor(3, 5, 4, rng);
  auto f = [&] { return dot(nn::conv_forward(layer, x).data, g.data); };
  nn::ConvGrad grad{std::vector<double>(layer.weight.size(), 0.0), std::vector<double>(3, 0.0)};
  const Tensor3 gx = nn::conv_backward(layer, nn::reflect_pad(x, 1), g, grad);
  for (std::size_t i = 0; i < x.data.size(); ++i) EXPECT_LT(rel_err(gx.data[i], central_diff(x.data[i], f)), 1e-6);
}

TEST(Cnn, ParameterCountAndShapes) {
  CnnArchitecture arch;
  const auto w = make_initial_weights(arch, 1);
  // enc0: 2->16, 16->16; enc1: 16->32, 32->32; up: 32->16; dec0: 32->16, 16->16; head: 16->2
  EXPECT_EQ(w.layers.size(), 8u);
  std::size_t expect = 0;
  for (auto [i, o] : std::vector<std::pair<int, int>>{{2, 16}, {16, 16}, {16, 32}, {32, 32}, {32, 16}, {32, 16},
                                                       {16, 16}, {16, 2}}) {
    expect += std::size_t(i * o * 9 + o);
  }
  EXPECT_EQ(w.parameter_count(), expect);
  EXPECT_NO_THROW(check_weights(w, arch));
  CnnArchitecture other = arch;
  other.base_filters = 8;
  EXPECT_THROW(check_weights(w, other), DimensionMismatch);
}

TEST(Cnn, ArchitectureValidation) {
  CnnArchitecture a;
  a.kernel_size = 4;
  EXPECT_THROW(a.validate(), InvalidGeometry);
  a = {};
  a.num_levels = 0;
  EXPECT_THROW(a.validate(), InvalidGeometry);
}

TEST(Cnn, ZeroWeightsGiveZeroOutput) {
  std::mt19937_64 rng(5);
  CnnArchitecture arch;
  const auto w = make_zero_weights(arch);
  for (auto [r, c] : {std::pair{16u, 16u}, std::pair{7u, 9u}}) {
    const auto out = cnn_forward(w, arch, random_two(r, c, rng));
    EXPECT_EQ(out.rows, r);
    EXPECT_EQ(out.cols, c);
    for (double v : out.channel0) EXPECT_EQ(v, 0.0);
    for (double v : out.channel1) EXPECT_EQ(v, 0.0);
  }
}

TEST(Cnn, DeltaKernelHeadIsIdentity) {
  std::mt19937_64 rng(6);
  CnnArchitecture arch;
  arch.num_levels = 1;
  arch.convs_per_level = 0;
  auto w = make_zero_weights(arch);
  ASSERT_EQ(w.layers.size(), 1u);
  w.layers[0].w(0, 0, 1, 1) = 1.0;
  w.layers[0].w(1, 1, 1, 1) = 1.0;
  const auto x = random_two(6, 5, rng);
  EXPECT_EQ(cnn_forward(w, arch, x), x);
}

TEST(Cnn, ResidualWithZeroWeightsIsIdentity) {
  std::mt19937_64 rng(7);
  CnnArchitecture arch;
  arch.residual = true;
  const auto x = random_two(8, 8, rng);
  EXPECT_EQ(cnn_forward(make_zero_weights(arch), arch, x), x);
}

TEST(Cnn, OddSizesArePaddedAndCropped) {
  std::mt19937_64 rng(8);
  CnnArchitecture arch;
  arch.num_levels = 3;
  arch.base_filters = 4;
  const auto w = make_initial_weights(arch, 3);
  const auto out = cnn_forward(w, arch, random_two(13, 10, rng));
  EXPECT_EQ(out.rows, 13u);
  EXPECT_EQ(out.cols, 10u);
}

TEST(Cnn, InitializationIsDeterministic) {
  CnnArchitecture arch;
  EXPECT_EQ(make_initial_weights(arch, 9), make_initial_weights(arch, 9));
  EXPECT_NE(make_initial_weights(arch, 9), make_initial_weights(arch, 10));
}

TEST(Cnn, GoldenForwardChecksum) {
  std::mt19937_64 rng(42);
  CnnArchitecture arch;
  const auto w = make_initial_weights(arch, 42);
  const auto out = cnn_forward(w, arch, random_two(16, 16, rng));
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < out.channel0.size(); ++i) {
    s0 += out.channel0[i] * double(i % 7 + 1);
    s1 += out.channel1[i] * double(i % 5 + 1);
  }
  EXPECT_NEAR(s0, GOLDEN_S0, 1e-9);
  EXPECT_NEAR(s1, GOLDEN_S1, 1e-9);
}

TEST(Cnn, MseLoss) {
  std::mt19937_64 rng(9);
  const auto t = random_two(4, 4, rng);
  EXPECT_EQ(mse_loss(t, t), 0.0);
  auto shifted = t;
  for (auto &v : shifted.channel0) v += 2.0;
  for (auto &v : shifted.channel1) v += 2.0;
  EXPECT_NEAR(mse_loss(shifted, t), 4.0, 1e-12);
  EXPECT_DOUBLE_EQ(mse_loss(TwoChannelTensor(1, 1, {1.0}, {0.0}), TwoChannelTensor(1, 1, {0.0}, {1.0})), 1.0);
  EXPECT_THROW(mse_loss(t, random_two(4, 5, rng)), DimensionMismatch);
}

TEST(Cnn, ZeroUpstreamGivesZeroGradient) {
  std::mt19937_64 rng(10);
  CnnArchitecture arch;
  arch.base_filters = 4;
  const auto w = make_initial_weights(arch, 1);
  const auto x = random_two(8, 8, rng);
  const auto g = cnn_backward(w, arch, x, TwoChannelTensor(8, 8));
  for (const auto &l : g.layers) {
    for (double v : l.weight) EXPECT_EQ(v, 0.0);
    for (double v : l.bias) EXPECT_EQ(v, 0.0);
  }
}

// Every parameter of small networks against central differences.
class GradientCheck : public ::testing::TestWithParam<std::tuple<std::size_t, std::size_t, bool>> {};

TEST_P(GradientCheck, AllParametersMatchFiniteDifferences) {
  const auto [levels, filters, residual] = GetParam();
  std::mt19937_64 rng(11 + levels * 10 + filters);
  CnnArchitecture arch;
  arch.num_levels = levels;
  arch.base_filters = filters;
  arch.residual = residual;
  auto w = make_initial_weights(arch, 5);
  // nonzero biases so the ReLU masks are exercised
  for (auto &l : w.layers) {
    for (auto &b : l.bias) b = std::normal_distribution<double>(0.0, 0.1)(rng);
  }
  const std::size_t n = levels == 1 ? 6 : 8;
  const auto x = random_two(n, n, rng);
  const auto y = random_two(x.rows, x.cols, rng);

  auto grad = make_zero_weights(arch);
  loss_and_gradient(w, arch, x, y, grad);
  auto f = [&] { return mse_loss(cnn_forward(w, arch, x), y); };
  // A step of 1e-5 can straddle a ReLU kink; such probes are re-taken with a
  // much smaller step and must then agree, and they must stay rare.
  std::size_t probes = 0, kinks = 0;
  auto check = [&](double analytic, double &param, const char *what, std::size_t li, std::size_t k) {
    ++probes;
    if (rel_err(analytic, central_diff(param, f)) < 1e-4) return;
    ++kinks;
    EXPECT_LT(rel_err(analytic, central_diff(param, f, 1e-7)), 1e-4) << "layer " << li << " " << what << " " << k;
  };
  for (std::size_t li = 0; li < w.layers.size(); ++li) {
    for (std::size_t k = 0; k < w.layers[li].weight.size(); ++k) {
      check(grad.layers[li].weight[k], w.layers[li].weight[k], "weight", li, k);
    }
    for (std::size_t k = 0; k < w.layers[li].bias.size(); ++k) {
      check(grad.layers[li].bias[k], w.layers[li].bias[k], "bias", li, k);
    }
  }
  EXPECT_LE(kinks * 50, probes);
}

INSTANTIATE_TEST_SUITE_P(TinyNets, GradientCheck,
                         ::testing::Values(std::tuple{1u, 2u, false}, std::tuple{2u, 2u, false},
                                           std::tuple{2u, 3u, true}, std::tuple{3u, 2u, false}));

#include "pnpmri/error.hpp"
#include "pnpmri/simulate.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace pnpmri;
using namespace pnpmri::oracle;

TEST(Phantom, SheppLoganRangeAndCorners) {
  const Image x = make_phantom(PhantomSpec{});
  double mx = 0.0, mn = 1.0;
  for (auto v : x.values()) {
    EXPECT_EQ(v.imag(), 0.0);
    mx = std::max(mx, v.real());
    mn = std::min(mn, v.real());
  }
  EXPECT_LE(mx, 1.0);
  EXPECT_GE(mn, 0.0);
  EXPECT_GT(mx, 0.5);
  EXPECT_EQ(x(0, 0), Complex(0, 0));
  EXPECT_EQ(x(0, 127), Complex(0, 0));
  EXPECT_EQ(x(127, 0), Complex(0, 0));
  EXPECT_EQ(x(127, 127), Complex(0, 0));
}

TEST(Phantom, DeterministicAndFamilyVaries) {
  PhantomSpec s;
  s.jitter = 0.1;
  s.rng_seed = 4;
  EXPECT_EQ(make_phantom(s), make_phantom(s));
  PhantomSpec t = s;
  t.rng_seed = 5;
  EXPECT_NE(make_phantom(s), make_phantom(t));

  PhantomSpec r;
  r.kind = PhantomKind::RandomEllipses;
  r.rng_seed = 3;
  EXPECT_EQ(make_phantom(r), make_phantom(r));
  for (const auto tmp = make_phantom(r); auto v : tmp.values()) {
    EXPECT_GE(v.real(), 0.0);
    EXPECT_LE(v.real(), 1.0);
  }
  r.num_ellipses = 0;
  for (const auto tmp = make_phantom(r); auto v : tmp.values()) EXPECT_EQ(v, Complex(0, 0));
}

TEST(Phantom, Validation) {
  PhantomSpec s;
  s.rows = 8;
  EXPECT_THROW(make_phantom(s), InvalidGeometry);
  EXPECT_EQ(phantom_kind_from_string("random-ellipses"), PhantomKind::RandomEllipses);
  EXPECT_EQ(phantom_kind_from_string(to_string(PhantomKind::SheppLogan)), PhantomKind::SheppLogan);
  EXPECT_THROW(phantom_kind_from_string("brain"), Error);
}

TEST(Maps, NormalizationAndSingleCoil) {
  const auto one = make_sensitivity_maps(1, 32, 32, 1);
  for (std::size_t i = 0; i < 32 * 32; ++i) {
    if (one.on_support(i)) EXPECT_NEAR(std::abs(one.values().coil(0)[i]), 1.0, 1e-12);
  }
  for (std::size_t L : {2u, 4u, 8u}) {
    const auto maps = make_sensitivity_maps(L, 48, 40, 7);
    for (std::size_t i = 0; i < 48 * 40; ++i) {
      if (!maps.on_support(i)) continue;
      double e = 0.0;
      for (std::size_t l = 0; l < L; ++l) e += std::norm(maps.values().coil(l)[i]);
      EXPECT_NEAR(e, 1.0, 1e-10);
    }
  }
  EXPECT_THROW(make_sensitivity_maps(0, 16, 16, 1), Error);
}

TEST(Maps, Smoothness) {
  const auto maps = make_sensitivity_maps(4, 128, 128, 3);
  double worst = 0.0;
  for (std::size_t l = 0; l < 4; ++l) {
    for (std::size_t r = 0; r < 128; ++r) {
      for (std::size_t c = 0; c < 128; ++c) {
        const double m = std::abs(maps.values()(l, r, c));
        if (c + 1 < 128) worst = std::max(worst, std::abs(m - std::abs(maps.values()(l, r, c + 1))));
        if (r + 1 < 128) worst = std::max(worst, std::abs(m - std::abs(maps.values()(l, r + 1, c))));
      }
    }
  }
  EXPECT_LE(worst, 0.1);
}

TEST(Mask, FullWhenUnaccelerated) {
  MaskSpec s;
  s.accel_rows = 1;
  const auto m = make_mask(32, 32, s);
  EXPECT_TRUE(m.is_full());
  EXPECT_EQ(m.pattern_kind(), PatternKind::Full);
  EXPECT_DOUBLE_EQ(m.acceleration(), 1.0);
}

TEST(Mask, UniformOneDimensionalCount) {
  const auto m = make_mask(128, 128, MaskSpec{});
  std::size_t lines = 0;
  for (std::size_t r = 0; r < 128; ++r) lines += m.kept(r, 0) ? 1 : 0;
  EXPECT_EQ(lines, 50u);
  EXPECT_EQ(m.count_kept(), 50u * 128u);
  EXPECT_NEAR(m.acceleration(), 2.56, 1e-12);
  // whole rows are kept or dropped
  for (std::size_t r = 0; r < 128; ++r) {
    for (std::size_t c = 1; c < 128; ++c) EXPECT_EQ(m.kept(r, c), m.kept(r, 0));
  }
  EXPECT_EQ(m.describe(), "uniform-1d R=4 acs=24");
}

TEST(Mask, TwoDimensionalCorners) {
  MaskSpec s;
  s.pattern = PatternKind::Uniform2d;
  s.accel_rows = s.accel_cols = 2;
  s.acs = 16;
  const auto m = make_mask(64, 64, s);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(m.kept(r, c), r % 2 == 0 && c % 2 == 0);
  }
  for (std::size_t r = 24; r < 40; ++r) {
    for (std::size_t c = 24; c < 40; ++c) EXPECT_TRUE(m.kept(r, c));
  }
}

TEST(Mask, RejectsBadGeometry) {
  MaskSpec s;
  s.acs = 40;
  EXPECT_THROW(make_mask(32, 32, s), InvalidGeometry);
  s = {};
  s.accel_rows = 0;
  EXPECT_THROW(make_mask(32, 32, s), InvalidGeometry);
}

TEST(Acquisition, NoiselessUnitaryIsDft) {
  const Image x = make_phantom(PhantomSpec{});
  MaskSpec full;
  full.accel_rows = 1;
  const auto d = simulate_acquisition(x, SensitivityMaps::uniform(128, 128), make_mask(128, 128, full), {0.0, 1});
  EXPECT_EQ(d.samples().coil_image(0), dft2_centered(x));
}

TEST(Acquisition, NoiselessMatchesForwardExactly) {
  const Image x = make_phantom(PhantomSpec{});
  const auto maps = make_sensitivity_maps(4, 128, 128, 2);
  const auto mask = make_mask(128, 128, MaskSpec{});
  EXPECT_EQ(simulate_acquisition(x, maps, mask, {0.0, 9}), EncodingOperator(maps, mask).forward(x));
}

TEST(Acquisition, NoiseStatistics) {
  const Image x = make_phantom(PhantomSpec{});
  const auto maps = make_sensitivity_maps(4, 128, 128, 2);
  const auto mask = make_mask(128, 128, MaskSpec{});
  const auto clean = simulate_acquisition(x, maps, mask, {0.0, 0});
  const auto noisy = simulate_acquisition(x, maps, mask, {0.01, 17});
  EXPECT_EQ(noisy, simulate_acquisition(x, maps, mask, {0.01, 17}));
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < noisy.samples().values().size(); ++i) {
    const Complex e = noisy.samples().values()[i] - clean.samples().values()[i];
    if (!mask.kept(i % (128 * 128))) {
      EXPECT_EQ(noisy.samples().values()[i], Complex(0, 0));
      continue;
    }
    ss += e.real() * e.real() + e.imag() * e.imag();
    n += 2;
  }
  EXPECT_NEAR(std::sqrt(ss / double(n)), 0.01, 0.0005);
}

TEST(LowResMaps, MatchTrueMaps) {
  PhantomSpec ps;
  const Image x = make_phantom(ps);
  const auto maps = make_sensitivity_maps(4, 128, 128, 5);
  MaskSpec ms;
  ms.pattern = PatternKind::Uniform2d;
  ms.accel_rows = ms.accel_cols = 2;
  const auto d = simulate_acquisition(x, maps, make_mask(128, 128, ms), {0.0, 1});
  const auto est = estimate_maps_lowres(d);
  // compare on the object support, up to the global phase ambiguity the estimator inherits from x
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < 128 * 128; ++i) {
    if (std::abs(x[i]) < 0.05 || !est.on_support(i)) continue;
    for (std::size_t l = 0; l < 4; ++l) {
      num += std::norm(est.values().coil(l)[i] - maps.values().coil(l)[i]);
      den += std::norm(maps.values().coil(l)[i]);
    }
  }
  EXPECT_LE(std::sqrt(num / den), 0.05);
}

TEST(LowResMaps, SingleCoilAndDegenerateInput) {
  const Image x = make_phantom(PhantomSpec{});
  const auto mask = make_mask(128, 128, MaskSpec{});
  const auto est = estimate_maps_lowres(simulate_acquisition(x, SensitivityMaps::uniform(128, 128), mask, {0.0, 1}));
  for (std::size_t i = 0; i < 128 * 128; ++i) {
    if (est.on_support(i)) EXPECT_NEAR(std::abs(est.values().coil(0)[i]), 1.0, 1e-6);
  }
  EXPECT_THROW(estimate_maps_lowres(KSpaceData(CoilArray(2, 128, 128), mask)), InsufficientAcs);
}

TEST(Dataset, PairsAreNormalizedAndDeterministic) {
  DatasetSpec spec;
  spec.count = 6;
  spec.phantom.rows = spec.phantom.cols = 32;
  spec.phantom.jitter = 0.1;
  spec.aliased_every = 3;
  spec.mask.acs = 8;
  spec.acquisition_sigma = 0.01;
  spec.noise_sigmas = {0.02, 0.05};
  const auto a = make_denoiser_dataset(spec);
  const auto b = make_denoiser_dataset(spec);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].noisy, b[k].noisy);
    EXPECT_EQ(a[k].clean, b[k].clean);
    double mx = 0.0;
    for (std::size_t i = 0; i < a[k].noisy.channel0.size(); ++i) {
      mx = std::max(mx, std::hypot(a[k].noisy.channel0[i], a[k].noisy.channel1[i]));
    }
    EXPECT_NEAR(mx, 1.0, 1e-12);
  }
}

#include <gtest/gtest.h>

#include <cstring>

#include "bevstream/error.hpp"
#include "bevstream/grid.hpp"
#include "bevstream/random.hpp"
#include "oracles.hpp"

using namespace bevstream;

namespace {

const GridGeometry kSmall{8, 8, 0.8};

bool bit_equal(const FeatureGrid& a, const FeatureGrid& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data().data(), b.data().data(), a.byte_size()) == 0;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kUsage;
}

}  // namespace

TEST(FeatureGrid, RejectsMismatchedData) {
  EXPECT_EQ(code_of([] { FeatureGrid(2, kSmall, std::vector<double>(10)); }), ErrorCode::kShape);
  EXPECT_EQ(code_of([] { FeatureGrid(1, GridGeometry{4, 4, 0.0}); }), ErrorCode::kInvalidGeometry);
}

TEST(Conv2d, IdentityKernelKeepsInput) {
  Rng rng(1);
  const auto x = random_grid(3, kSmall, rng);
  EXPECT_TRUE(bit_equal(conv2d(x, ConvKernel::identity(3, 1)), x));
  EXPECT_EQ(max_abs_diff(conv2d(x, ConvKernel::identity(3, 3)), x), 0.0);
}

TEST(Conv2d, ZeroKernelGivesZeroGrid) {
  Rng rng(2);
  const auto x = random_grid(2, kSmall, rng);
  const auto y = conv2d(x, ConvKernel(4, 2, 3, 3));
  EXPECT_EQ(y.channels(), 4u);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, CentreAndEastTapsGiveTwoHot) {
  FeatureGrid x(1, kSmall);
  x.at(0, 4, 4) = 1.0;
  ConvKernel k(1, 1, 3, 3);
  k.at(0, 0, 1, 1) = 1.0;  // centre
  k.at(0, 0, 1, 2) = 1.0;  // east neighbour
  const auto y = conv2d(x, k);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) {
      const bool hot = r == 4 && (c == 4 || c == 3);
      EXPECT_EQ(y.at(0, r, c), hot ? 1.0 : 0.0) << r << "," << c;
    }
}

TEST(Conv2d, MatchesNaiveCorrelation) {
  Rng rng(3);
  for (std::size_t ks : {1u, 3u, 5u}) {
    const GridGeometry g{9, 13, 0.5};
    const auto x = random_grid(3, g, rng);
    const auto k = random_kernel(4, 3, ks, ks == 5 ? 3 : ks, rng);
    EXPECT_LT(max_abs_diff(conv2d(x, k), oracle::naive_conv2d(x, k)), 1e-12) << "ks=" << ks;
  }
}

TEST(Conv2d, ErrorPaths) {
  const FeatureGrid x(2, kSmall);
  EXPECT_EQ(code_of([&] { conv2d(x, ConvKernel(1, 3, 3, 3)); }), ErrorCode::kShape);
  EXPECT_EQ(code_of([&] { conv2d(x, ConvKernel(1, 2, 2, 2)); }), ErrorCode::kUnsupportedKernel);
  EXPECT_EQ(code_of([&] { conv2d(x, ConvKernel(1, 2, 3, 4)); }), ErrorCode::kUnsupportedKernel);
}

TEST(Conv2d, IsLinearInInput) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_grid(3, kSmall, rng);
    const auto y = random_grid(3, kSmall, rng);
    const auto k = random_kernel(2, 3, 3, 3, rng);
    const double a = std::uniform_real_distribution<double>(-2, 2)(rng);
    const double b = std::uniform_real_distribution<double>(-2, 2)(rng);
    const auto lhs = conv2d(a * x + b * y, k);
    const auto rhs = a * conv2d(x, k) + b * conv2d(y, k);
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-6);
  }
}

TEST(Conv2d, ReluAndTanhActivations) {
  FeatureGrid x(1, kSmall);
  x.at(0, 1, 1) = -2.0;
  x.at(0, 2, 2) = 0.5;
  const auto relu = conv2d(x, ConvKernel::identity(1), Activation::kRelu);
  EXPECT_EQ(relu.at(0, 1, 1), 0.0);
  EXPECT_EQ(relu.at(0, 2, 2), 0.5);
  const auto th = conv2d(x, ConvKernel::identity(1), Activation::kTanh);
  EXPECT_DOUBLE_EQ(th.at(0, 1, 1), std::tanh(-2.0));
}

TEST(ChannelConcat, StacksFirstOperandFirst) {
  Rng rng(5);
  const auto a = random_grid(2, kSmall, rng);
  const auto b = random_grid(3, kSmall, rng);
  const auto ab = channel_concat(a, b);
  ASSERT_EQ(ab.channels(), 5u);
  EXPECT_TRUE(bit_equal(channel_slice(ab, 0, 2), a));
  EXPECT_TRUE(bit_equal(channel_slice(ab, 2, 3), b));
}

TEST(ChannelConcat, SpatialMismatchIsShapeError) {
  const FeatureGrid a(1, kSmall);
  const FeatureGrid b(1, GridGeometry{8, 9, 0.8});
  const FeatureGrid c(1, GridGeometry{8, 8, 0.5});
  EXPECT_EQ(code_of([&] { channel_concat(a, b); }), ErrorCode::kShape);
  EXPECT_EQ(code_of([&] { channel_concat(a, c); }), ErrorCode::kShape);
}

TEST(ChannelConcat, SplitKernelIdentity) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_grid(2, kSmall, rng);
    const auto b = random_grid(3, kSmall, rng);
    const auto ka = random_kernel(4, 2, 3, 3, rng);
    const auto kb = random_kernel(4, 3, 3, 3, rng);
    const ConvKernel parts[] = {ka, kb};
    const auto whole = conv2d(channel_concat(a, b), kernel_concat(parts));
    EXPECT_LT(max_abs_diff(whole, conv2d(a, ka) + conv2d(b, kb)), 1e-6);
  }
}

TEST(ChannelConcat, ZeroPartnerIsAnnihilated) {
  Rng rng(7);
  const auto x = random_grid(2, kSmall, rng);
  const ConvKernel parts[] = {ConvKernel::identity(2, 3), random_kernel(2, 2, 3, 3, rng)};
  const auto y = conv2d(channel_concat(x, FeatureGrid::zeros_like(x)), kernel_concat(parts));
  EXPECT_EQ(max_abs_diff(y, conv2d(x, ConvKernel::identity(2, 3))), 0.0);
}

TEST(ChannelSplit, EqualChunksRoundTrip) {
  Rng rng(8);
  const auto k = random_kernel(3, 12, 3, 3, rng);
  const auto chunks = channel_split(k, 4);
  ASSERT_EQ(chunks.size(), 4u);
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.in_channels();
  EXPECT_EQ(total, 12u);
  const auto back = kernel_concat(chunks);
  EXPECT_TRUE(std::equal(back.weights().begin(), back.weights().end(), k.weights().begin()));
  EXPECT_EQ(code_of([&] { channel_split(k, 5); }), ErrorCode::kShape);
}

TEST(ChannelSplit, FullConvEqualsSumOfChunkConvs) {
  Rng rng(9);
  for (std::size_t n = 1; n <= 5; ++n) {
    std::vector<FeatureGrid> parts;
    for (std::size_t j = 0; j < n; ++j) parts.push_back(random_grid(2, kSmall, rng));
    const auto k = random_kernel(3, 2 * n, 3, 3, rng);
    const auto chunks = channel_split(k, n);
    FeatureGrid sum = conv2d(parts[0], chunks[0]);
    for (std::size_t j = 1; j < n; ++j) sum += conv2d(parts[j], chunks[j]);
    EXPECT_LT(max_abs_diff(conv2d(channel_concat(parts), k), sum), 1e-6) << "n=" << n;
  }
}

TEST(GridSample, IdentityIsBitExact) {
  Rng rng(10);
  const auto x = random_grid(3, kSmall, rng);
  EXPECT_TRUE(bit_equal(grid_sample(x, GridTransform::identity()), x));
}

TEST(GridSample, UnitShiftMovesContentAndZeroFills) {
  Rng rng(11);
  const auto x = random_grid(2, kSmall, rng, 0.5, 1.0);
  const auto y = grid_sample(x, GridTransform::translation(1, 0));
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t col = 0; col + 1 < 8; ++col) EXPECT_EQ(y.at(c, r, col), x.at(c, r, col + 1));
      EXPECT_EQ(y.at(c, r, 7), 0.0);
    }
}

TEST(GridSample, IntegerShiftsMatchIndexShiftBitExact) {
  Rng rng(12);
  const auto x = random_grid(3, GridGeometry{11, 7, 0.8}, rng);
  for (long dc = -8; dc <= 8; ++dc)
    for (long dr = -12; dr <= 12; dr += 3) {
      EXPECT_TRUE(bit_equal(grid_sample(x, GridTransform::translation(dc, dr)),
                            oracle::index_shift(x, dc, dr)))
          << dc << "," << dr;
    }
}

TEST(GridSample, HalfCellShiftSplitsMass) {
  FeatureGrid x(1, GridGeometry{10, 10, 0.8});
  x.at(0, 5, 5) = 1.0;
  const auto y = grid_sample(x, GridTransform::translation(0.5, 0));
  EXPECT_DOUBLE_EQ(y.at(0, 5, 5), 0.5);
  EXPECT_DOUBLE_EQ(y.at(0, 5, 4), 0.5);
  double total = 0.0;
  for (double v : y.data()) total += v;
  EXPECT_DOUBLE_EQ(total, 1.0);
}

TEST(GridSample, BilinearMatchesHandFormula) {
  Rng rng(13);
  const GridGeometry g{9, 9, 0.8};
  const auto x = random_grid(1, g, rng);
  GridTransform t;
  t.m = {0.9, -0.2, 1.3, 0.25, 1.1, -0.7};
  const auto y = grid_sample(x, t);
  auto at = [&](long r, long c) {
    return (r < 0 || c < 0 || r > 8 || c > 8) ? 0.0
                                              : x.at(0, static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  for (long r = 0; r < 9; ++r)
    for (long c = 0; c < 9; ++c) {
      const double sc = 0.9 * c - 0.2 * r + 1.3;
      const double sr = 0.25 * c + 1.1 * r - 0.7;
      const long c0 = static_cast<long>(std::floor(sc));
      const long r0 = static_cast<long>(std::floor(sr));
      const double fc = sc - c0, fr = sr - r0;
      const double want = (1 - fr) * ((1 - fc) * at(r0, c0) + fc * at(r0, c0 + 1)) +
                          fr * ((1 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1));
      EXPECT_NEAR(y.at(0, static_cast<std::size_t>(r), static_cast<std::size_t>(c)), want, 1e-12);
    }
}

TEST(GridSample, CommutesWithConvolutionOnInterior) {
  Rng rng(14);
  const GridGeometry g{24, 24, 0.8};
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_grid(3, g, rng);
    const auto k = random_kernel(2, 3, 3, 3, rng);
    const long dc = std::uniform_int_distribution<long>(-3, 3)(rng);
    const long dr = std::uniform_int_distribution<long>(-3, 3)(rng);
    const auto t = GridTransform::translation(dc, dr);
    const std::size_t margin = 1 + static_cast<std::size_t>(std::max(std::abs(dc), std::abs(dr)));
    EXPECT_LT(max_abs_diff_interior(conv2d(grid_sample(x, t), k), grid_sample(conv2d(x, k), t), margin),
              1e-6);
  }
}

TEST(GridSample, IntegerWarpsComposeOnInterior) {
  Rng rng(15);
  const GridGeometry g{20, 20, 0.8};
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_grid(2, g, rng);
    std::uniform_int_distribution<long> d(-3, 3);
    const auto t_jk = GridTransform::translation(d(rng), d(rng));
    const auto t_ij = GridTransform::translation(d(rng), d(rng));
    const auto twice = grid_sample(grid_sample(x, t_jk), t_ij);
    const auto once = grid_sample(x, compose(t_ij, t_jk));
    EXPECT_EQ(max_abs_diff_interior(twice, once, 6), 0.0);
  }
}

TEST(AllOnes, ConstantField) {
  const GridGeometry g{5, 7, 0.8};
  const auto zero = all_ones(g, 2, 0.0);
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);
  const auto half = all_ones(g, 1, 0.5);
  for (double v : half.data()) EXPECT_EQ(v, 0.5);
  EXPECT_NEAR(interior_mean(all_ones(g, 1, 0.37), 0, 0), 0.37, 1e-15);
  EXPECT_EQ(code_of([&] { all_ones(g, 0, 1.0); }), ErrorCode::kShape);
}

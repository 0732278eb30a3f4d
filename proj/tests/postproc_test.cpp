#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace stereoforge;

namespace {

Image two_pixels(int a, int b)
{
  Image img(2, 1);
  for (int c = 0; c < 3; ++c) {
    img(0, 0, c) = static_cast<std::uint8_t>(a);
    img(1, 0, c) = static_cast<std::uint8_t>(b);
  }
  return img;
}

/// Max |CDF_a - CDF_b| over the 256 code values of one channel.
double ks_distance(const Image& a, const Image& b, int c)
{
  auto ca = channel_cdf(a, c), cb = channel_cdf(b, c);
  double worst = 0.0;
  for (int v = 0; v < 256; ++v)
    worst = std::max(worst, std::abs(double(ca[v]) / ca[255] - double(cb[v]) / cb[255]));
  return worst;
}

} // namespace

TEST(MatchHistograms, TwoPixelExample)
{
  Image out = match_histograms(two_pixels(0, 255), two_pixels(100, 200));
  EXPECT_EQ(out(0, 0, 0), 100);
  EXPECT_EQ(out(1, 0, 2), 200);
}

TEST(MatchHistograms, SelfMatchIsIdentity)
{
  std::mt19937 rng(1);
  for (int i = 0; i < 5; ++i) {
    Image img = sftest::random_image(32, 32, rng);
    EXPECT_EQ(match_histograms(img, img), img);
  }
}

TEST(MatchHistograms, ConstantSourceTakesReferenceMaximum)
{
  std::mt19937 rng(2);
  Image ref = sftest::random_image(8, 8, rng);
  Image out = match_histograms(Image(8, 8, 50), ref);
  for (int c = 0; c < 3; ++c) {
    int mx = 0;
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) mx = std::max<int>(mx, ref(x, y, c));
    EXPECT_EQ(out(0, 0, c), mx);
  }
}

TEST(MatchHistograms, AgreesWithSortQuantileOracle)
{
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Image src = sftest::random_image(8, 8, rng);
    Image ref = sftest::random_image(8 + trial % 3, 8, rng);
    for (int c = 0; c < 3; ++c) {
      auto map = histogram_mapping(src, ref, c);
      auto want = sftest::sort_quantile_oracle(src, ref, c);
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          int v = src(x, y, c);
          ASSERT_EQ(map[v], want[v]) << "value " << v;
        }
    }
  }
}

// Quantile mapping cannot split one source level, so the KS bound needs sources whose
// levels each hold at most about 1/256 of the mass; uniform random images qualify.
TEST(MatchHistograms, MonotoneAndCloseInKs)
{
  std::mt19937 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Image src = sftest::random_image(64 + trial, 64, rng);
    Image ref = sftest::random_image(80, 72, rng);
    Image out = match_histograms(src, ref);
    for (int c = 0; c < 3; ++c) {
      auto map = histogram_mapping(src, ref, c);
      for (int v = 1; v < 256; ++v) ASSERT_LE(map[v - 1], map[v]);
      EXPECT_LE(ks_distance(out, ref, c), 2.0 / 256.0);
    }
  }
}

TEST(MatchHistograms, FrameCountMismatch)
{
  try {
    match_histograms(Video(2, 8, 8), Video(3, 8, 8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::FrameCountMismatch);
  }
  // Sizes may differ as long as the frame counts agree.
  EXPECT_NO_THROW(match_histograms(Video(2, 8, 8), Video(2, 16, 4)));
}

TEST(Pack, Layouts)
{
  std::mt19937 rng(5);
  Image l = sftest::random_image(4, 4, rng), r = sftest::random_image(4, 4, rng);
  Image sbs = pack(l, r, PackMode::sbs);
  EXPECT_EQ(sbs.width(), 8);
  EXPECT_EQ(sbs.height(), 4);
  Image tall_l = sftest::random_image(6, 512, rng), tall_r = sftest::random_image(6, 512, rng);
  EXPECT_EQ(pack(tall_l, tall_r, PackMode::tb).height(), 1024);
  EXPECT_EQ(pack(l, l, PackMode::anaglyph), l);
  Image ana = pack(l, r, PackMode::anaglyph);
  EXPECT_EQ(ana(1, 2, 0), l(1, 2, 0));
  EXPECT_EQ(ana(1, 2, 1), r(1, 2, 1));
  EXPECT_THROW(pack(l, Image(5, 4), PackMode::sbs), Error);
  EXPECT_THROW(parse_pack_mode("interlaced"), Error);
}

TEST(Pack, SideBySideAndTopBottomAreLossless)
{
  std::mt19937 rng(6);
  for (auto mode : {PackMode::sbs, PackMode::tb}) {
    Image l = sftest::random_image(7, 5, rng), r = sftest::random_image(7, 5, rng);
    auto [a, b] = unpack(pack(l, r, mode), mode);
    EXPECT_EQ(a, l);
    EXPECT_EQ(b, r);
  }
}

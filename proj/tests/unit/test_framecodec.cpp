#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "kfvio/core/error.hpp"
#include "kfvio/framecodec/codec.hpp"

using namespace kfvio;

namespace {

Frame random_frame(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  Frame f(w, h);
  for (auto& p : f.pixels()) p = static_cast<std::uint8_t>(u(rng));
  return f;
}

// Smooth gradient plus noise, closer to camera content than white noise.
Frame natural_frame(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 6);
  Frame f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      f.at(x, y) = static_cast<std::uint8_t>(
          std::clamp(128 + 80 * std::sin(x * 0.05) * std::cos(y * 0.07) + n(rng), 0.0, 255.0));
  return f;
}

}  // namespace

TEST(Frame, DimensionLimits) {
  EXPECT_NO_THROW(Frame(752, 480));
  EXPECT_THROW(Frame(753, 480), Error);
  EXPECT_THROW(Frame(752, 481), Error);
  EXPECT_THROW(Frame(0, 10), Error);
  EXPECT_THROW(Frame(4, 4, std::vector<std::uint8_t>(15)), Error);
  EXPECT_THROW(encode_frame(Frame{}), Error);
}

TEST(Codec, UniformFrame) {
  const Frame f(64, 32, 80);
  const CompressedFrame cf = encode_frame(f);
  for (const Block26& b : cf.blocks()) {
    EXPECT_EQ(b.minimum, 10);
    EXPECT_EQ(b.threshold, 10);
    EXPECT_EQ(b.bitmap, 0);
  }
  EXPECT_EQ(decode_frame(cf), f);
}

TEST(Codec, MidpointRuleExample) {
  // Truncated values 0..15 placed with min 2 and max 12.
  const int levels[16] = {2, 12, 7, 8, 3, 4, 5, 6, 9, 10, 11, 2, 12, 7, 8, 4};
  Frame f(4, 4);
  for (int i = 0; i < 16; ++i) f.at(i % 4, i / 4) = static_cast<std::uint8_t>(levels[i] << 3 | (i % 8));
  const Block26 b = encode_frame(f).block(0, 0);
  EXPECT_EQ(b.minimum, 2);
  EXPECT_EQ(b.threshold, 7);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(b.bit(i % 4, i / 4), levels[i] >= 8) << i;
}

TEST(Codec, EveryBitmapRecoveredWithFixedRange) {
  // All 2^16 two-level blocks at min 2 / max 12: bitmap must come back as the pattern.
  for (std::uint32_t pattern = 1; pattern < 0xffff; ++pattern) {
    Frame f(4, 4);
    for (int i = 0; i < 16; ++i) f.at(i % 4, i / 4) = static_cast<std::uint8_t>(((pattern >> (15 - i)) & 1 ? 12 : 2) << 3);
    const Block26 b = encode_frame(f).block(0, 0);
    ASSERT_EQ(b.bitmap, pattern);
    ASSERT_EQ(b.threshold, 7);
    ASSERT_EQ(b.minimum, 2);
  }
}

TEST(Codec, ThresholdIsFloorMidpointForAllRanges) {
  for (int lo = 0; lo < 32; ++lo) {
    for (int hi = lo; hi < 32; ++hi) {
      Frame f(4, 4, static_cast<std::uint8_t>(lo << 3));
      f.at(3, 3) = static_cast<std::uint8_t>(hi << 3 | 7);
      const Block26 b = encode_frame(f).block(0, 0);
      EXPECT_EQ(b.threshold, (lo + hi) / 2);
      EXPECT_LE(b.minimum, b.threshold);
      EXPECT_EQ(b.bit(3, 3), hi > (lo + hi) / 2);  // ties go to 0
    }
  }
}

TEST(Codec, DecodeRule) {
  Block26 b;
  b.minimum = 2;
  b.threshold = 7;
  b.bitmap = 0x8000;  // pixel (0, 0) set
  const CompressedFrame cf(4, 4, {b});
  EXPECT_EQ(decode_pixel(cf, 0, 0), 96);
  EXPECT_EQ(decode_pixel(cf, 1, 0), 16);
  EXPECT_THROW(decode_pixel(cf, 4, 0), Error);
  EXPECT_THROW(decode_pixel(cf, 0, -1), Error);

  Block26 clamp;
  clamp.minimum = 1;
  clamp.threshold = 20;
  clamp.bitmap = 0xffff;
  EXPECT_EQ(clamp.level(0, 0), 31);
}

TEST(Codec, FullFramePayload) {
  const CompressedFrame cf = encode_frame(natural_frame(752, 480, 1));
  EXPECT_EQ(cf.block_count(), 22560u);
  EXPECT_EQ(cf.payload_bits(), 22560u * 26);
  EXPECT_EQ(cf.payload_bytes(), 73320u);
  EXPECT_EQ(serialize(cf).size(), 4u + 73320u);
}

TEST(Codec, BitCostExactForAnySize) {
  for (auto [w, h] : {std::pair{1, 1}, {5, 5}, {17, 3}, {100, 60}, {752, 480}}) {
    const CompressedFrame cf = encode_frame(random_frame(w, h, 3));
    const std::size_t blocks = static_cast<std::size_t>((w + 3) / 4) * ((h + 3) / 4);
    EXPECT_EQ(cf.payload_bits(), 26 * blocks);
    const std::size_t bytes = serialize(cf).size() - 4;
    EXPECT_GE(bytes * 8, 26 * blocks);
    EXPECT_LT(bytes * 8, 26 * blocks + 8);
  }
}

TEST(Codec, SerializedLayout) {
  Block26 b;
  b.bitmap = 0xA5A5;
  b.threshold = 7;
  b.minimum = 2;
  const auto bytes = serialize(CompressedFrame(4, 4, {b}));
  // 1010010110100101 | 00111 | 00010, zero-padded.
  const std::vector<std::uint8_t> expected = {0x00, 0x04, 0x00, 0x04, 0xA5, 0xA5, 0x38, 0x80};
  EXPECT_EQ(bytes, expected);
}

TEST(Codec, SerializeRoundTrip) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CompressedFrame cf = encode_frame(random_frame(37 + 40 * static_cast<int>(seed), 29, seed));
    const auto bytes = serialize(cf);
    EXPECT_EQ(deserialize(bytes), cf);
    std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 1);
    EXPECT_THROW(deserialize(truncated), Error);
  }
  EXPECT_THROW(deserialize(std::vector<std::uint8_t>{0, 4}), Error);
  EXPECT_THROW(deserialize(std::vector<std::uint8_t>{0, 0, 0, 4, 0, 0, 0, 0}), Error);
}

TEST(Codec, EdgeReplicationPadding) {
  Frame f(5, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) f.at(x, y) = static_cast<std::uint8_t>(x == 4 || y == 4 ? 200 : 40);
  const CompressedFrame cf = encode_frame(f);
  EXPECT_EQ(cf.block_count(), 4u);
  // Bottom-right block holds a single replicated value.
  EXPECT_EQ(cf.block(1, 1).bitmap, 0);
  EXPECT_EQ(decode_pixel(cf, 4, 4), 200);
  EXPECT_EQ(decode_frame(cf).width(), 5);
}

TEST(Codec, ErrorBoundedByBlockRange) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Frame f = seed % 2 ? random_frame(96, 64, seed) : natural_frame(96, 64, seed);
    const CompressedFrame cf = encode_frame(f);
    const Frame d = decode_frame(cf);
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) {
        const Block26& b = cf.block(x / 4, y / 4);
        int lo = 31, hi = 0;
        for (int r = 0; r < 4; ++r)
          for (int c = 0; c < 4; ++c) {
            lo = std::min(lo, f.at(x / 4 * 4 + c, y / 4 * 4 + r) >> 3);
            hi = std::max(hi, f.at(x / 4 * 4 + c, y / 4 * 4 + r) >> 3);
          }
        const int t = f.at(x, y) >> 3, got = d.at(x, y) >> 3;
        EXPECT_LE(std::abs(got - t), hi - lo);
        EXPECT_GE(got, lo);
        EXPECT_LE(std::abs(d.at(x, y) - f.at(x, y)), 8 * (hi - lo) + 7);
        // Order preservation around the stored threshold.
        if (b.bit(x % 4, y % 4))
          EXPECT_GT(t, b.threshold);
        else
          EXPECT_LE(t, b.threshold);
      }
    }
  }
}

TEST(Codec, Deterministic) {
  const Frame f = natural_frame(200, 120, 9);
  EXPECT_EQ(serialize(encode_frame(f)), serialize(encode_frame(Frame(f))));
}

TEST(Codec, RawRatio) { EXPECT_NEAR(128.0 / Block26::kBits, 4.923, 1e-3); }

TEST(BtcSweep, DefaultSettingMatchesCodec) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Frame f = natural_frame(123, 77, seed);
    EXPECT_EQ(btc_roundtrip(f, 4, 5), decode_frame(encode_frame(f)));
  }
}

TEST(BtcSweep, TruncationOnlyAndErrors) {
  const Frame f = random_frame(40, 30, 2);
  const Frame full = btc_roundtrip(f, 1, 8);
  EXPECT_EQ(full, f);
  const Frame three = btc_roundtrip(f, 1, 3);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x) EXPECT_EQ(three.at(x, y), f.at(x, y) & 0xE0);
  EXPECT_THROW(btc_roundtrip(f, 0, 5), Error);
  EXPECT_THROW(btc_roundtrip(f, 4, 9), Error);
  EXPECT_THROW(btc_roundtrip(f, 4, 0), Error);
}

TEST(BtcSweep, ErrorGrowsWithBlockSize) {
  const Frame f = natural_frame(160, 96, 4);
  auto mae = [&](const Frame& g) {
    double s = 0;
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) s += std::abs(f.at(x, y) - g.at(x, y));
    return s / (f.width() * f.height());
  };
  const double e4 = mae(btc_roundtrip(f, 4, 5)), e8 = mae(btc_roundtrip(f, 8, 5)), e16 = mae(btc_roundtrip(f, 16, 5));
  EXPECT_LE(e4, e8);
  EXPECT_LE(e8, e16);
}

TEST(BtcSweep, BitsPerPixel) {
  EXPECT_DOUBLE_EQ(btc_bits_per_pixel(4, 5), 26.0 / 16);
  EXPECT_DOUBLE_EQ(btc_bits_per_pixel(8, 5), 74.0 / 64);
  EXPECT_DOUBLE_EQ(btc_bits_per_pixel(1, 6), 6.0);
}

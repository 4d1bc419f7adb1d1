#include "kfvio/framecodec/codec.hpp"

#include <algorithm>
#include <array>

#include "kfvio/core/error.hpp"

namespace kfvio {

namespace {

constexpr int kTruncateShift = 3;  // 8-bit -> 5-bit
constexpr std::uint8_t kMaxLevel = 31;

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void put(std::uint32_t value, int bits) {
    for (int b = bits - 1; b >= 0; --b) {
      if (fill_ == 0) out_.push_back(0);
      if ((value >> b) & 1u) out_.back() |= static_cast<std::uint8_t>(0x80u >> fill_);
      fill_ = (fill_ + 1) % 8;
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
  int fill_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint32_t get(int bits) {
    std::uint32_t v = 0;
    for (int b = 0; b < bits; ++b) {
      const std::size_t byte = pos_ / 8;
      if (byte >= in_.size()) fail(ErrorCode::kParse, "compressed frame truncated");
      v = (v << 1) | ((in_[byte] >> (7 - pos_ % 8)) & 1u);
      ++pos_;
    }
    return v;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint8_t Block26::level(int col, int row) const {
  if (!bit(col, row)) return minimum;
  // Bit-1 pixels decode to the implied block maximum 2*threshold - min.
  const int implied_max = 2 * static_cast<int>(threshold) - static_cast<int>(minimum);
  return static_cast<std::uint8_t>(std::clamp(implied_max, 0, static_cast<int>(kMaxLevel)));
}

CompressedFrame::CompressedFrame(int width, int height, std::vector<Block26> blocks)
    : width_(width), height_(height), blocks_(std::move(blocks)) {
  if (width <= 0 || height <= 0) fail(ErrorCode::kInvalidArgument, "compressed frame dimensions must be positive");
  if (blocks_.size() != static_cast<std::size_t>(blocks_x()) * blocks_y())
    fail(ErrorCode::kInvalidArgument, "block count does not match dimensions");
}

CompressedFrame encode_frame(const Frame& frame) {
  if (frame.empty()) fail(ErrorCode::kInvalidArgument, "cannot encode an empty frame");
  const int w = frame.width(), h = frame.height();
  const int bx_count = (w + 3) / 4, by_count = (h + 3) / 4;
  std::vector<Block26> blocks(static_cast<std::size_t>(bx_count) * by_count);

  std::array<std::uint8_t, 16> px{};
  for (int by = 0; by < by_count; ++by) {
    for (int bx = 0; bx < bx_count; ++bx) {
      for (int r = 0; r < 4; ++r) {
        const int y = std::min(by * 4 + r, h - 1);
        for (int c = 0; c < 4; ++c) {
          const int x = std::min(bx * 4 + c, w - 1);
          px[4 * r + c] = frame.at(x, y) >> kTruncateShift;
        }
      }
      const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
      Block26 b;
      b.minimum = *lo;
      b.threshold = static_cast<std::uint8_t>((*lo + *hi) / 2);
      for (int i = 0; i < 16; ++i)
        if (px[i] > b.threshold) b.bitmap |= static_cast<std::uint16_t>(1u << (15 - i));
      blocks[static_cast<std::size_t>(by) * bx_count + bx] = b;
    }
  }
  return CompressedFrame(w, h, std::move(blocks));
}

std::uint8_t decode_pixel(const CompressedFrame& cf, int x, int y) {
  if (x < 0 || y < 0 || x >= cf.width() || y >= cf.height())
    fail(ErrorCode::kOutOfRange, "decode_pixel: coordinate outside frame");
  return static_cast<std::uint8_t>(cf.block(x / 4, y / 4).level(x % 4, y % 4) << kTruncateShift);
}

Frame decode_frame(const CompressedFrame& cf) {
  Frame out(cf.width(), cf.height());
  for (int y = 0; y < cf.height(); ++y)
    for (int x = 0; x < cf.width(); ++x)
      out.at(x, y) = static_cast<std::uint8_t>(cf.block(x / 4, y / 4).level(x % 4, y % 4) << kTruncateShift);
  return out;
}

std::vector<std::uint8_t> serialize(const CompressedFrame& cf) {
  std::vector<std::uint8_t> out;
  out.reserve(4 + cf.payload_bytes());
  out.push_back(static_cast<std::uint8_t>(cf.width() >> 8));
  out.push_back(static_cast<std::uint8_t>(cf.width() & 0xff));
  out.push_back(static_cast<std::uint8_t>(cf.height() >> 8));
  out.push_back(static_cast<std::uint8_t>(cf.height() & 0xff));
  BitWriter writer(out);
  for (const Block26& b : cf.blocks()) {
    writer.put(b.bitmap, 16);
    writer.put(b.threshold, 5);
    writer.put(b.minimum, 5);
  }
  return out;
}

CompressedFrame deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) fail(ErrorCode::kParse, "compressed frame header truncated");
  const int w = (bytes[0] << 8) | bytes[1];
  const int h = (bytes[2] << 8) | bytes[3];
  if (w <= 0 || h <= 0) fail(ErrorCode::kParse, "compressed frame has zero dimension");
  const std::size_t n = static_cast<std::size_t>((w + 3) / 4) * ((h + 3) / 4);
  const std::size_t expected = 4 + (n * Block26::kBits + 7) / 8;
  if (bytes.size() != expected) fail(ErrorCode::kParse, "compressed frame size mismatch");

  BitReader reader(bytes.subspan(4));
  std::vector<Block26> blocks(n);
  for (Block26& b : blocks) {
    b.bitmap = static_cast<std::uint16_t>(reader.get(16));
    b.threshold = static_cast<std::uint8_t>(reader.get(5));
    b.minimum = static_cast<std::uint8_t>(reader.get(5));
  }
  return CompressedFrame(w, h, std::move(blocks));
}

Frame btc_roundtrip(const Frame& frame, int block, int level_bits) {
  if (frame.empty()) fail(ErrorCode::kInvalidArgument, "cannot encode an empty frame");
  if (block < 1 || level_bits < 1 || level_bits > 8)
    fail(ErrorCode::kInvalidArgument, "btc_roundtrip: block must be >= 1 and bits in [1, 8]");
  const int shift = 8 - level_bits, max_level = (1 << level_bits) - 1;
  const int w = frame.width(), h = frame.height();
  Frame out(w, h);
  for (int by = 0; by < h; by += block)
    for (int bx = 0; bx < w; bx += block) {
      int lo = max_level, hi = 0;
      for (int r = 0; r < block; ++r)
        for (int c = 0; c < block; ++c) {
          const int v = frame.at(std::min(bx + c, w - 1), std::min(by + r, h - 1)) >> shift;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      const int t = (lo + hi) / 2;
      const int top = std::clamp(2 * t - lo, 0, max_level);
      for (int y = by; y < std::min(by + block, h); ++y)
        for (int x = bx; x < std::min(bx + block, w); ++x)
          out.at(x, y) = static_cast<std::uint8_t>(((frame.at(x, y) >> shift) > t ? top : lo) << shift);
    }
  return out;
}

double btc_bits_per_pixel(int block, int level_bits) {
  if (block <= 1) return level_bits;  // plain truncation, nothing to binarize
  return static_cast<double>(block * block + 2 * level_bits) / static_cast<double>(block * block);
}

}  // namespace kfvio

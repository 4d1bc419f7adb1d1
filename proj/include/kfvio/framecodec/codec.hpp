#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kfvio/framecodec/frame.hpp"

namespace kfvio {

/// One compressed 4x4 block: 16 comparison bits plus 5-bit threshold and
/// 5-bit minimum, 26 bits in total.
struct Block26 {
  std::uint16_t bitmap = 0;    // bit (15 - (4*row + col)) is the pixel at (col, row)
  std::uint8_t threshold = 0;  // 5-bit
  std::uint8_t minimum = 0;    // 5-bit

  static constexpr int kBits = 26;
  static constexpr int kSide = 4;

  bool bit(int col, int row) const { return (bitmap >> (15 - (4 * row + col))) & 1u; }
  /// Reconstructed 5-bit level of a pixel in this block.
  std::uint8_t level(int col, int row) const;

  bool operator==(const Block26&) const = default;
};

/// 5-bit truncation followed by per-block binarization around the midpoint of
/// the block's dynamic range.
class CompressedFrame {
 public:
  CompressedFrame() = default;
  CompressedFrame(int width, int height, std::vector<Block26> blocks);

  int width() const { return width_; }
  int height() const { return height_; }
  int blocks_x() const { return (width_ + 3) / 4; }
  int blocks_y() const { return (height_ + 3) / 4; }
  std::size_t block_count() const { return blocks_.size(); }

  const Block26& block(int bx, int by) const { return blocks_[static_cast<std::size_t>(by) * blocks_x() + bx]; }
  std::span<const Block26> blocks() const { return blocks_; }

  /// Exactly 26 bits per block.
  std::size_t payload_bits() const { return block_count() * Block26::kBits; }
  std::size_t payload_bytes() const { return (payload_bits() + 7) / 8; }

  bool operator==(const CompressedFrame&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Block26> blocks_;
};

/// Throws kInvalidArgument on an empty frame. Dimensions that are not a
/// multiple of 4 are padded by edge replication.
CompressedFrame encode_frame(const Frame& frame);

/// Throws kOutOfRange for coordinates outside the original frame.
std::uint8_t decode_pixel(const CompressedFrame& cf, int x, int y);

Frame decode_frame(const CompressedFrame& cf);

/// Binary format: u16 width, u16 height (big-endian), then the blocks in
/// row-major order, each packed MSB-first as bitmap[16] | threshold[5] |
/// minimum[5]. The final byte is zero-padded.
std::vector<std::uint8_t> serialize(const CompressedFrame& cf);
CompressedFrame deserialize(std::span<const std::uint8_t> bytes);

/// Same scheme with a configurable block side and truncation depth, returned
/// already decoded. (4, 5) reproduces decode_frame(encode_frame(f)).
/// Throws kInvalidArgument for block < 1 or bits outside [1, 8].
Frame btc_roundtrip(const Frame& frame, int block, int level_bits);
/// block^2 bitmap bits plus two levels, spread over the block. A 1x1 block
/// is plain truncation and costs level_bits.
double btc_bits_per_pixel(int block, int level_bits);

}  // namespace kfvio

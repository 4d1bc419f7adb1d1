#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace kfvio {

inline constexpr int kMaxFrameWidth = 752;
inline constexpr int kMaxFrameHeight = 480;

/// Row-major 8-bit grayscale image, at most 752x480.
class Frame {
 public:
  Frame() = default;
  /// Throws kInvalidArgument on empty or oversized dimensions.
  Frame(int width, int height, std::uint8_t fill = 0);
  Frame(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  bool operator==(const Frame&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

}  // namespace kfvio

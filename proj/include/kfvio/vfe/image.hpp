#pragma once

#include <vector>

#include "kfvio/framecodec/codec.hpp"
#include "kfvio/framecodec/frame.hpp"
#include "kfvio/geometry/so3.hpp"

namespace kfvio {

/// Single-channel float image used inside the frontend. Pixel centres sit at
/// integer coordinates.
class Image {
 public:
  Image() = default;
  Image(int width, int height, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  float at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  float& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  /// Bilinear sample with border clamping.
  float sample(double x, double y) const;
  bool contains(double x, double y, double margin = 0.0) const {
    return x >= margin && y >= margin && x <= width_ - 1 - margin && y <= height_ - 1 - margin;
  }
  const std::vector<float>& data() const { return data_; }

 private:
  int width_ = 0, height_ = 0;
  std::vector<float> data_;
};

Image to_image(const Frame& frame);
/// Rounds and clamps back to 8 bits.
Frame to_frame(const Image& image);
/// Frame as seen after a trip through the frame-buffer codec.
Image decoded_image(const CompressedFrame& cf);

using Pyramid = std::vector<Image>;

/// Level 0 is the input; each further level halves it by 2x2 averaging.
/// Throws kConfig when a level gets smaller than the LK window.
Pyramid build_pyramid(const Image& base, int levels, int lk_window);

}  // namespace kfvio

#include "kfvio/vfe/image.hpp"

#include <algorithm>
#include <cmath>

#include "kfvio/core/error.hpp"

namespace kfvio {

Image::Image(int width, int height, float fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) fail(ErrorCode::kInvalidArgument, "image: empty dimensions");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

float Image::sample(double x, double y) const {
  x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  const int x0 = std::min(static_cast<int>(x), width_ - 2 < 0 ? 0 : width_ - 2);
  const int y0 = std::min(static_cast<int>(y), height_ - 2 < 0 ? 0 : height_ - 2);
  const int x1 = std::min(x0 + 1, width_ - 1), y1 = std::min(y0 + 1, height_ - 1);
  const double ax = x - x0, ay = y - y0;
  const double top = (1 - ax) * at(x0, y0) + ax * at(x1, y0);
  const double bot = (1 - ax) * at(x0, y1) + ax * at(x1, y1);
  return static_cast<float>((1 - ay) * top + ay * bot);
}

Image to_image(const Frame& frame) {
  Image out(frame.width(), frame.height());
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x) out.at(x, y) = frame.at(x, y);
  return out;
}

Frame to_frame(const Image& image) {
  Frame out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(image.at(x, y)), 0L, 255L));
  return out;
}

Image decoded_image(const CompressedFrame& cf) { return to_image(decode_frame(cf)); }

Pyramid build_pyramid(const Image& base, int levels, int lk_window) {
  if (levels < 1) fail(ErrorCode::kConfig, "pyramid: need at least one level");
  if (base.empty()) fail(ErrorCode::kInvalidArgument, "pyramid: empty frame");
  Pyramid pyr;
  pyr.reserve(static_cast<std::size_t>(levels));
  pyr.push_back(base);
  for (int l = 1; l < levels; ++l) {
    const Image& src = pyr.back();
    const int w = src.width() / 2, h = src.height() / 2;
    if (w < lk_window || h < lk_window)
      fail(ErrorCode::kConfig, "pyramid: level " + std::to_string(l) + " is " + std::to_string(w) + "x" +
                                   std::to_string(h) + ", smaller than the LK window");
    Image dst(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        dst.at(x, y) = 0.25f * (src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) + src.at(2 * x, 2 * y + 1) +
                                src.at(2 * x + 1, 2 * y + 1));
    pyr.push_back(std::move(dst));
  }
  if (base.width() < lk_window || base.height() < lk_window)
    fail(ErrorCode::kConfig, "pyramid: frame smaller than the LK window");
  return pyr;
}

}  // namespace kfvio

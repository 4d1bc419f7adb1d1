#include "kfvio/framecodec/frame.hpp"

#include <string>

#include "kfvio/core/error.hpp"

namespace kfvio {

namespace {
void check_dims(int width, int height) {
  if (width <= 0 || height <= 0)
    fail(ErrorCode::kInvalidArgument, "frame dimensions must be positive");
  if (width > kMaxFrameWidth || height > kMaxFrameHeight)
    fail(ErrorCode::kInvalidArgument, "frame " + std::to_string(width) + "x" +
                                          std::to_string(height) + " exceeds 752x480");
}
}  // namespace

Frame::Frame(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  check_dims(width, height);
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

Frame::Frame(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height);
  if (pixels_.size() != static_cast<std::size_t>(width) * height)
    fail(ErrorCode::kInvalidArgument, "pixel buffer does not match frame dimensions");
}

}  // namespace kfvio

#pragma once

#include <optional>

#include "kfvio/vfe/image.hpp"
#include "kfvio/vfe/rectify.hpp"

namespace kfvio {

struct StereoMatchParams {
  int template_width = 51, template_height = 5;
  int search_width = 421, search_height = 5;
  double ratio = 0.8;  // best SAD must stay below ratio * runner-up
};

struct StereoMatch {
  double disparity = 0.0;  // px, uL - uR
  double best_sad = 0.0;
  double second_sad = 0.0;
};

/// SAD template search along the rectified row. Disparities run from 0 to
/// search_width - template_width. Returns nullopt when the search region
/// leaves the frame or the ratio test finds the match ambiguous.
std::optional<StereoMatch> stereo_match(const Image& left, const Image& right, const Vec2& left_pixel,
                                        const StereoMatchParams& params);

/// Back-projects a rectified left pixel with its disparity. Throws kTooFar
/// when the disparity is not above min_disparity.
Vec3 triangulate(const Vec2& left_pixel, double disparity, const RectifiedCamera& cam, double min_disparity = 0.0);

}  // namespace kfvio

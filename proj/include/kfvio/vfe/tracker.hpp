#pragma once

#include <vector>

#include "kfvio/vfe/image.hpp"

namespace kfvio {

struct LkParams {
  int window = 15;        // px, odd
  int iterations = 30;    // per level
  double epsilon = 0.01;  // px, update-norm convergence
  double min_eigenvalue = 1e-2;
  double max_mean_error = 24.0;  // grey levels over the level-0 window
};

struct TrackResult {
  bool ok = false;
  Vec2 position = Vec2::Zero();
  int iterations = 0;
};

/// Coarse-to-fine forward-additive Lucas-Kanade. The pyramids must have the
/// same depth. Losses come back as ok == false.
std::vector<TrackResult> track_features(const Pyramid& prev, const Pyramid& cur, const std::vector<Vec2>& points,
                                        const LkParams& params);

}  // namespace kfvio

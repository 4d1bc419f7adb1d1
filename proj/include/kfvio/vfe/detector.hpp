#pragma once

#include <vector>

#include "kfvio/vfe/image.hpp"

namespace kfvio {

struct DetectorParams {
  int grid_cols = 57, grid_rows = 32;  // 1824 cells on 752x480
  double min_score = 25.0;             // min-eigenvalue floor, grey levels^2
  double suppression_radius = 10.0;    // px
  int border = 8;                      // px kept clear so LK windows fit
};

struct Candidate {
  Vec2 pixel = Vec2::Zero();
  double score = 0.0;
  int cell = 0;
};

/// Shi-Tomasi score at an integer pixel: smaller eigenvalue of the summed
/// gradient outer products over the 3x3 neighbourhood.
double shi_tomasi_score(const Image& image, int x, int y);

int grid_cell(const DetectorParams& params, int width, int height, const Vec2& pixel);

/// Best-scoring pixel of every grid cell that clears min_score.
std::vector<Candidate> detect_candidates(const Image& image, const DetectorParams& params);

/// Picks up to `needed` candidates, least-populated cells first, skipping any
/// within the suppression radius of an existing or already selected feature.
std::vector<Vec2> select_features(const std::vector<Candidate>& candidates, const std::vector<Vec2>& existing,
                                  int needed, int width, int height, const DetectorParams& params);

}  // namespace kfvio

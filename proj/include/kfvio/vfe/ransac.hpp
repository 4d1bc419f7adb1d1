#pragma once

#include <cstdint>
#include <vector>

#include "kfvio/geometry/so3.hpp"

namespace kfvio {

struct RansacParams {
  int iterations = 100;
  double threshold = 3e-3;  // rad for the 2-point test, m for the 1-point test
  std::uint64_t seed = 1;
};

struct RansacResult {
  std::vector<int> inliers;  // ascending indices
  Vec3 model = Vec3::Zero(); // translation direction (mono) or translation (stereo)
  bool rotation_only = false;
  int iterations = 0;
};

/// Epipolar residual of f_cur against the plane through R*f_prev and t. Falls
/// back to the angle between R*f_prev and f_cur when that plane is undefined.
double epipolar_residual(const Vec3& f_prev, const Vec3& f_cur, const Mat3& cur_R_prev, const Vec3& t);

/// Bearing pairs with the rotation taken from the gyro. Throws
/// kInsufficientData for fewer than two pairs.
RansacResult mono_ransac_2pt(const std::vector<Vec3>& f_prev, const std::vector<Vec3>& f_cur,
                             const Mat3& cur_R_prev, const RansacParams& params);

/// 3D point pairs p_cur = R p_prev + t. Optional per-pair scale divides the
/// residual (e.g. depth uncertainty). Throws kInsufficientData on empty input.
RansacResult stereo_ransac_1pt(const std::vector<Vec3>& p_prev, const std::vector<Vec3>& p_cur,
                               const Mat3& cur_R_prev, const RansacParams& params,
                               const std::vector<double>& scale = {});

}  // namespace kfvio

#pragma once

#include <cstdint>
#include <vector>

#include "kfvio/dataset/types.hpp"
#include "kfvio/geometry/state.hpp"

namespace kfvio {

struct TrajectorySample {
  std::int64_t timestamp_ns = 0;
  KFState state;
};

enum class Alignment { kRigid, kYaw };

struct TrajectoryError {
  double ate_rmse = 0.0;         // m, rigid alignment
  double ate_rmse_yaw = 0.0;     // m, yaw + translation alignment
  double path_length = 0.0;      // m, ground truth over the estimated span
  double normalized = 0.0;       // %, 100 * ate_rmse / path_length
  double normalized_yaw = 0.0;   // %
  std::size_t matched = 0;
};

/// Least-squares rotation and translation taking `from` onto `to` (no
/// scale). Yaw alignment restricts the rotation to the z axis.
Pose align_points(const std::vector<Vec3>& from, const std::vector<Vec3>& to, Alignment kind);

/// Estimated samples outside the ground-truth span are skipped. Throws
/// kInsufficientData for fewer than two estimates and kOutOfRange when
/// fewer than two overlap the ground truth.
TrajectoryError evaluate_trajectory(const std::vector<TrajectorySample>& estimate, const GroundTruth& gt);

}  // namespace kfvio

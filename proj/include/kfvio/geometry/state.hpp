#pragma once

#include <Eigen/Core>

#include "kfvio/geometry/so3.hpp"

namespace kfvio {

/// Tangent layout of a keyframe state. Every 15-vector and 15x15 block in the
/// library uses this ordering: (dtheta, dp, dv, dbg, dba).
namespace state_index {
inline constexpr int kRot = 0;
inline constexpr int kPos = 3;
inline constexpr int kVel = 6;
inline constexpr int kGyroBias = 9;
inline constexpr int kAccelBias = 12;
inline constexpr int kDim = 15;
/// Leading (rotation, position) part touched by camera factors.
inline constexpr int kPoseDim = 6;
}  // namespace state_index

using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat15 = Eigen::Matrix<double, 15, 15>;

/// Body (IMU) state in the world frame at a keyframe.
struct KFState {
  Rotation rotation = Rotation::Identity();  // world_R_body
  Vec3 position = Vec3::Zero();              // m
  Vec3 velocity = Vec3::Zero();              // m/s
  Vec3 gyro_bias = Vec3::Zero();             // rad/s
  Vec3 accel_bias = Vec3::Zero();            // m/s^2
};

/// Right-perturbation retract: R <- R Exp(dtheta), everything else additive.
KFState retract(const KFState& x, const Vec15& delta);

/// Inverse of retract: returns d with retract(from, d) == to.
Vec15 state_difference(const KFState& from, const KFState& to);

/// Rigid transform a_T_b (maps points from frame b into frame a).
struct Pose {
  Rotation rotation = Rotation::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  Pose operator*(const Pose& o) const {
    return {rotation * o.rotation, rotation * o.translation + translation};
  }
  Pose inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
};

}  // namespace kfvio

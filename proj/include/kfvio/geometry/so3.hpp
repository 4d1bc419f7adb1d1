#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace kfvio {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rotations are plain orthonormal 3x3 matrices with det = +1.
using Rotation = Mat3;

Mat3 hat(const Vec3& w);
Vec3 vee(const Mat3& m);

/// Rodrigues exponential. Falls back to the second-order series below 1e-8 rad.
Rotation so3_exp(const Vec3& omega);

/// Inverse of so3_exp with |result| <= pi. Stable up to and including pi.
/// Throws kInvalidArgument when R is not a rotation (tolerance 1e-6).
Vec3 so3_log(const Rotation& R);

/// Right Jacobian Jr(phi): Exp(phi + d) ~= Exp(phi) Exp(Jr(phi) d).
Mat3 so3_right_jacobian(const Vec3& phi);
Mat3 so3_right_jacobian_inverse(const Vec3& phi);

bool is_rotation(const Mat3& R, double tol = 1e-9);

/// Nearest rotation in the Frobenius sense.
Rotation orthonormalize(const Mat3& R);

Eigen::Quaterniond to_quaternion(const Rotation& R);
Rotation from_quaternion(const Eigen::Quaterniond& q);

}  // namespace kfvio

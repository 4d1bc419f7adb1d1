#pragma once

#include <Eigen/Core>

#include "kfvio/geometry/state.hpp"

namespace kfvio {

/// Pinhole camera with 4-coefficient radial-tangential distortion.
struct CameraCalib {
  double fx = 458.0, fy = 457.0;  // px
  double cx = 367.0, cy = 248.0;  // px
  double k1 = 0.0, k2 = 0.0, p1 = 0.0, p2 = 0.0;
  int width = 752, height = 480;  // px
  double baseline = 0.0;          // m, > 0 for a stereo-rectified pair
  Pose body_T_cam;                // camera-to-IMU extrinsic

  bool has_distortion() const { return k1 != 0.0 || k2 != 0.0 || p1 != 0.0 || p2 != 0.0; }
};

struct StereoCalib {
  CameraCalib left;
  CameraCalib right;

  /// right_T_left, i.e. maps points in the left camera frame into the right one.
  Pose right_T_left() const { return right.body_T_cam.inverse() * left.body_T_cam; }
};

/// Throws kConfig if intrinsics are unusable (fx, fy <= 0, bad image size).
void validate(const CameraCalib& calib, bool stereo = false);

/// Applies radial-tangential distortion to normalized image coordinates.
Vec2 distort(const CameraCalib& calib, const Vec2& normalized);
Eigen::Matrix2d distort_jacobian(const CameraCalib& calib, const Vec2& normalized);

/// Camera-frame point to pixel. Throws kBehindCamera for z <= 0.
Vec2 project(const CameraCalib& calib, const Vec3& point_cam);
Vec2 project(const CameraCalib& calib, const Vec3& point_cam, Eigen::Matrix<double, 2, 3>* jacobian);

/// Pixel to undistorted normalized coordinates (x/z, y/z) by Gauss-Newton on
/// the distortion model.
Vec2 undistort_point(const CameraCalib& calib, const Vec2& pixel);

}  // namespace kfvio

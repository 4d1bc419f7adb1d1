#pragma once

#include <optional>
#include <vector>

#include "kfvio/geometry/camera.hpp"
#include "kfvio/vfe/image.hpp"

namespace kfvio {

/// Shared pinhole model of a rectified pair. Both views have these
/// intrinsics, the right one sits `baseline` along +x of the left.
struct RectifiedCamera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  double baseline = 0;  // 0 for a mono setup
  int width = 0, height = 0;
  Pose body_T_cam;  // rectified left camera
};

/// Remap tables for one view: rectified pixel -> source pixel, -1 where the
/// ray leaves the source camera.
struct RemapTable {
  int width = 0, height = 0;
  std::vector<float> map_x, map_y;
  double valid_fraction() const;
};

class Rectifier {
 public:
  /// Fusiello-style rectification. In mono mode only the left view is
  /// undistorted and its orientation kept. Throws kConfig on a degenerate rig.
  Rectifier(const StereoCalib& calib, bool stereo = true);

  const RectifiedCamera& camera() const { return camera_; }
  const RemapTable& table(bool right) const { return right ? right_map_ : left_map_; }
  /// Raw (distorted) pixel -> rectified pixel.
  Vec2 rectify_point(const Vec2& raw_pixel, bool right = false) const;
  /// Rectified pixel -> unit bearing in the rectified frame.
  Vec3 bearing(const Vec2& rect_pixel) const;
  Frame remap(const Frame& raw, bool right = false) const;
  bool stereo() const { return stereo_; }

 private:
  StereoCalib calib_;
  bool stereo_;
  RectifiedCamera camera_;
  Mat3 left_R_rect_ = Mat3::Identity(), right_R_rect_ = Mat3::Identity();
  RemapTable left_map_, right_map_;
};

}  // namespace kfvio

#include "kfvio/vfe/rectify.hpp"

#include <algorithm>
#include <cmath>

#include "kfvio/core/error.hpp"

namespace kfvio {
namespace {

RemapTable build_table(const CameraCalib& src, const Mat3& src_R_rect, const RectifiedCamera& rc) {
  RemapTable t;
  t.width = rc.width;
  t.height = rc.height;
  t.map_x.assign(static_cast<std::size_t>(rc.width) * rc.height, -1.0f);
  t.map_y = t.map_x;
  for (int v = 0; v < rc.height; ++v)
    for (int u = 0; u < rc.width; ++u) {
      const Vec3 ray = src_R_rect * Vec3((u - rc.cx) / rc.fx, (v - rc.cy) / rc.fy, 1.0);
      if (ray.z() <= 1e-6) continue;
      const Vec2 d = distort(src, Vec2(ray.x() / ray.z(), ray.y() / ray.z()));
      const double x = src.fx * d.x() + src.cx, y = src.fy * d.y() + src.cy;
      if (!std::isfinite(x) || !std::isfinite(y) || x < 0 || y < 0 || x > src.width - 1 || y > src.height - 1) continue;
      const std::size_t i = static_cast<std::size_t>(v) * rc.width + u;
      t.map_x[i] = static_cast<float>(x);
      t.map_y[i] = static_cast<float>(y);
    }
  return t;
}

}  // namespace

double RemapTable::valid_fraction() const {
  if (map_x.empty()) return 0.0;
  const auto n = std::count_if(map_x.begin(), map_x.end(), [](float x) { return x >= 0.0f; });
  return static_cast<double>(n) / static_cast<double>(map_x.size());
}

Rectifier::Rectifier(const StereoCalib& calib, bool stereo) : calib_(calib), stereo_(stereo) {
  validate(calib.left, false);
  const CameraCalib& L = calib.left;
  camera_.fx = L.fx;
  camera_.fy = L.fy;
  camera_.cx = L.cx;
  camera_.cy = L.cy;
  camera_.width = L.width;
  camera_.height = L.height;
  Mat3 body_R_rect = L.body_T_cam.rotation;
  if (stereo) {
    validate(calib.right, false);
    const Vec3 c1 = L.body_T_cam.translation, c2 = calib.right.body_T_cam.translation;
    const Vec3 base = c2 - c1;
    if (base.norm() < 1e-6) fail(ErrorCode::kConfig, "rectify: camera centres coincide");
    const Vec3 x = base.normalized();
    const Vec3 z_old = (L.body_T_cam.rotation.col(2) + calib.right.body_T_cam.rotation.col(2)).normalized();
    const Vec3 y_raw = z_old.cross(x);
    if (!z_old.allFinite() || y_raw.norm() < 1e-6)
      fail(ErrorCode::kConfig, "rectify: baseline parallel to the optical axis");
    const Vec3 y = y_raw.normalized();
    body_R_rect.col(0) = x;
    body_R_rect.col(1) = y;
    body_R_rect.col(2) = x.cross(y);
    camera_.baseline = base.norm();
    right_R_rect_ = calib.right.body_T_cam.rotation.transpose() * body_R_rect;
  }
  left_R_rect_ = L.body_T_cam.rotation.transpose() * body_R_rect;
  camera_.body_T_cam = {body_R_rect, L.body_T_cam.translation};
  left_map_ = build_table(L, left_R_rect_, camera_);
  if (stereo) right_map_ = build_table(calib.right, right_R_rect_, camera_);
}

Vec2 Rectifier::rectify_point(const Vec2& raw_pixel, bool right) const {
  const CameraCalib& src = right ? calib_.right : calib_.left;
  const Vec2 n = undistort_point(src, raw_pixel);
  const Vec3 ray = (right ? right_R_rect_ : left_R_rect_).transpose() * Vec3(n.x(), n.y(), 1.0);
  if (ray.z() <= 0.0) fail(ErrorCode::kBehindCamera, "rectify_point: ray behind rectified camera");
  return {camera_.fx * ray.x() / ray.z() + camera_.cx, camera_.fy * ray.y() / ray.z() + camera_.cy};
}

Vec3 Rectifier::bearing(const Vec2& rect_pixel) const {
  return Vec3((rect_pixel.x() - camera_.cx) / camera_.fx, (rect_pixel.y() - camera_.cy) / camera_.fy, 1.0).normalized();
}

Frame Rectifier::remap(const Frame& raw, bool right) const {
  if (right && !stereo_) fail(ErrorCode::kInvalidArgument, "rectify: no right view in mono mode");
  const RemapTable& t = table(right);
  if (raw.width() != (right ? calib_.right : calib_.left).width ||
      raw.height() != (right ? calib_.right : calib_.left).height)
    fail(ErrorCode::kInvalidArgument, "rectify: frame size does not match calibration");
  const Image src = to_image(raw);
  Frame out(t.width, t.height);
  for (int v = 0; v < t.height; ++v)
    for (int u = 0; u < t.width; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * t.width + u;
      if (t.map_x[i] < 0.0f) continue;
      out.at(u, v) = static_cast<std::uint8_t>(std::clamp(std::lround(src.sample(t.map_x[i], t.map_y[i])), 0L, 255L));
    }
  return out;
}

}  // namespace kfvio

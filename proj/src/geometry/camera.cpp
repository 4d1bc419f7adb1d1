#include "kfvio/geometry/camera.hpp"

#include <Eigen/LU>

#include "kfvio/core/error.hpp"

namespace kfvio {

void validate(const CameraCalib& calib, bool stereo) {
  if (!(calib.fx > 0.0) || !(calib.fy > 0.0))
    fail(ErrorCode::kConfig, "camera focal lengths must be positive");
  if (calib.width <= 0 || calib.height <= 0)
    fail(ErrorCode::kConfig, "camera resolution must be positive");
  if (stereo && !(calib.baseline > 0.0))
    fail(ErrorCode::kConfig, "stereo baseline must be positive");
  if (!is_rotation(calib.body_T_cam.rotation, 1e-6))
    fail(ErrorCode::kConfig, "camera extrinsic rotation is not orthonormal");
}

Vec2 distort(const CameraCalib& c, const Vec2& n) {
  const double x = n.x(), y = n.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + c.k1 * r2 + c.k2 * r2 * r2;
  return {x * radial + 2.0 * c.p1 * x * y + c.p2 * (r2 + 2.0 * x * x),
          y * radial + c.p1 * (r2 + 2.0 * y * y) + 2.0 * c.p2 * x * y};
}

Eigen::Matrix2d distort_jacobian(const CameraCalib& c, const Vec2& n) {
  const double x = n.x(), y = n.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + c.k1 * r2 + c.k2 * r2 * r2;
  const double dradial = c.k1 + 2.0 * c.k2 * r2;  // d radial / d r2
  Eigen::Matrix2d J;
  J(0, 0) = radial + 2.0 * x * x * dradial + 2.0 * c.p1 * y + 6.0 * c.p2 * x;
  J(0, 1) = 2.0 * x * y * dradial + 2.0 * c.p1 * x + 2.0 * c.p2 * y;
  J(1, 0) = 2.0 * x * y * dradial + 2.0 * c.p1 * x + 2.0 * c.p2 * y;
  J(1, 1) = radial + 2.0 * y * y * dradial + 6.0 * c.p1 * y + 2.0 * c.p2 * x;
  return J;
}

Vec2 project(const CameraCalib& calib, const Vec3& p) { return project(calib, p, nullptr); }

Vec2 project(const CameraCalib& calib, const Vec3& p, Eigen::Matrix<double, 2, 3>* jacobian) {
  if (!(p.z() > 0.0)) fail(ErrorCode::kBehindCamera, "point has non-positive depth");
  const double inv_z = 1.0 / p.z();
  const Vec2 n(p.x() * inv_z, p.y() * inv_z);
  const Vec2 d = distort(calib, n);
  if (jacobian) {
    Eigen::Matrix<double, 2, 3> dn_dp;
    dn_dp << inv_z, 0.0, -p.x() * inv_z * inv_z,  //
        0.0, inv_z, -p.y() * inv_z * inv_z;
    const Eigen::Matrix2d K = Eigen::Vector2d(calib.fx, calib.fy).asDiagonal();
    *jacobian = K * distort_jacobian(calib, n) * dn_dp;
  }
  return {calib.fx * d.x() + calib.cx, calib.fy * d.y() + calib.cy};
}

Vec2 undistort_point(const CameraCalib& calib, const Vec2& pixel) {
  const Vec2 target((pixel.x() - calib.cx) / calib.fx, (pixel.y() - calib.cy) / calib.fy);
  if (!calib.has_distortion()) return target;
  Vec2 n = target;
  for (int it = 0; it < 20; ++it) {
    const Vec2 err = distort(calib, n) - target;
    if (err.squaredNorm() < 1e-26) break;
    n -= distort_jacobian(calib, n).lu().solve(err);
  }
  return n;
}

}  // namespace kfvio

#include "kfvio/geometry/so3.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "kfvio/core/error.hpp"

namespace kfvio {

namespace {
constexpr double kSmallAngle = 1e-8;
}

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),  //
      w.z(), 0.0, -w.x(),   //
      -w.y(), w.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

Rotation so3_exp(const Vec3& omega) {
  if (!omega.allFinite()) fail(ErrorCode::kInvalidArgument, "so3_exp: non-finite input");
  const double theta = omega.norm();
  const Mat3 W = hat(omega);
  if (theta < kSmallAngle) return Mat3::Identity() + W + 0.5 * W * W;
  const double s = std::sin(theta), c = std::cos(theta);
  const double a = s / theta;
  const double b = (1.0 - c) / (theta * theta);
  return Mat3::Identity() + a * W + b * W * W;
}

Vec3 so3_log(const Rotation& R) {
  if (!R.allFinite() || !is_rotation(R, 1e-6))
    fail(ErrorCode::kInvalidArgument, "so3_log: input is not a rotation matrix");

  const Vec3 skew = 0.5 * vee(R - R.transpose());  // sin(theta) * axis
  const double sin_theta = skew.norm();
  const double cos_theta = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < kSmallAngle) return skew;  // first order; skew ~ omega
  if (theta < M_PI - 1e-2) return (theta / sin_theta) * skew;

  // Near pi the skew part vanishes; recover the axis from the symmetric part
  // (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) a a^T.
  const Mat3 B = 0.5 * (R + R.transpose()) - cos_theta * Mat3::Identity();
  Eigen::Index k = 0;
  B.diagonal().maxCoeff(&k);
  Vec3 axis = B.col(k) / std::sqrt(B(k, k) * (1.0 - cos_theta));
  axis.normalize();
  if (axis.dot(skew) < 0.0) axis = -axis;
  return theta * axis;
}

Mat3 so3_right_jacobian(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 W = hat(phi);
  if (theta < 1e-5) return Mat3::Identity() - 0.5 * W + W * W / 6.0;
  const double t2 = theta * theta;
  return Mat3::Identity() - (1.0 - std::cos(theta)) / t2 * W +
         (theta - std::sin(theta)) / (t2 * theta) * W * W;
}

Mat3 so3_right_jacobian_inverse(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 W = hat(phi);
  if (theta < 1e-5) return Mat3::Identity() + 0.5 * W + W * W / 12.0;
  const double t2 = theta * theta;
  const double coeff = 1.0 / t2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Mat3::Identity() + 0.5 * W + coeff * W * W;
}

bool is_rotation(const Mat3& R, double tol) {
  return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

Rotation orthonormalize(const Mat3& R) {
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0.0) {
    Mat3 U = svd.matrixU();
    U.col(2) *= -1.0;
    out = U * svd.matrixV().transpose();
  }
  return out;
}

Eigen::Quaterniond to_quaternion(const Rotation& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

Rotation from_quaternion(const Eigen::Quaterniond& q) { return q.normalized().toRotationMatrix(); }

}  // namespace kfvio

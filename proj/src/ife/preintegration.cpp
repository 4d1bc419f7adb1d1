#include "kfvio/ife/preintegration.hpp"

#include <algorithm>

#include "kfvio/core/error.hpp"

namespace kfvio {

Rotation PreintegratedDelta::corrected_rotation(const Vec3& bg) const {
  return delta_rotation * so3_exp(dR_dbg * (bg - gyro_bias));
}

Vec3 PreintegratedDelta::corrected_velocity(const Vec3& bg, const Vec3& ba) const {
  return delta_velocity + dv_dbg * (bg - gyro_bias) + dv_dba * (ba - accel_bias);
}

Vec3 PreintegratedDelta::corrected_position(const Vec3& bg, const Vec3& ba) const {
  return delta_position + dp_dbg * (bg - gyro_bias) + dp_dba * (ba - accel_bias);
}

PreintegratedDelta integrate_sample(const PreintegratedDelta& acc, const ImuSample& sample, double dt,
                                    const ImuNoise& noise) {
  if (!(dt > 0.0)) fail(ErrorCode::kInvalidArgument, "integrate_sample: dt must be positive");
  if (!sample.angular_velocity.allFinite() || !sample.linear_acceleration.allFinite())
    fail(ErrorCode::kInvalidArgument, "integrate_sample: non-finite IMU sample");

  const Vec3 w = sample.angular_velocity - acc.gyro_bias;
  const Vec3 a = sample.linear_acceleration - acc.accel_bias;
  const Vec3 phi = w * dt;
  const Rotation dR_step = so3_exp(phi);
  const Mat3 Jr = so3_right_jacobian(phi);
  const Mat3& R = acc.delta_rotation;  // value before this step
  const Mat3 R_a_hat = R * hat(a);
  const double dt2 = dt * dt;

  PreintegratedDelta out = acc;
  out.delta_position = acc.delta_position + acc.delta_velocity * dt + 0.5 * R * a * dt2;
  out.delta_velocity = acc.delta_velocity + R * a * dt;
  out.delta_rotation = orthonormalize(R * dR_step);
  out.duration_s = acc.duration_s + dt;
  out.sample_count = acc.sample_count + 1;

  out.dp_dba = acc.dp_dba + acc.dv_dba * dt - 0.5 * R * dt2;
  out.dp_dbg = acc.dp_dbg + acc.dv_dbg * dt - 0.5 * R_a_hat * acc.dR_dbg * dt2;
  out.dv_dba = acc.dv_dba - R * dt;
  out.dv_dbg = acc.dv_dbg - R_a_hat * acc.dR_dbg * dt;
  out.dR_dbg = dR_step.transpose() * acc.dR_dbg - Jr * dt;

  // Error-state transition over (dtheta, dv, dp).
  Mat9 A = Mat9::Identity();
  A.block<3, 3>(0, 0) = dR_step.transpose();
  A.block<3, 3>(3, 0) = -R_a_hat * dt;
  A.block<3, 3>(6, 0) = -0.5 * R_a_hat * dt2;
  A.block<3, 3>(6, 3) = Mat3::Identity() * dt;
  Eigen::Matrix<double, 9, 3> Bg = Eigen::Matrix<double, 9, 3>::Zero();
  Eigen::Matrix<double, 9, 3> Ba = Eigen::Matrix<double, 9, 3>::Zero();
  Bg.block<3, 3>(0, 0) = Jr * dt;
  Ba.block<3, 3>(3, 0) = R * dt;
  Ba.block<3, 3>(6, 0) = 0.5 * R * dt2;
  const double gyro_var = noise.gyro_noise_density * noise.gyro_noise_density / dt;
  const double accel_var = noise.accel_noise_density * noise.accel_noise_density / dt;
  out.covariance = A * acc.covariance * A.transpose() + gyro_var * Bg * Bg.transpose() +
                   accel_var * Ba * Ba.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

Preintegrator::Preintegrator(ImuNoise noise, const Vec3& gyro_bias, const Vec3& accel_bias) : noise_(noise) {
  reset(gyro_bias, accel_bias);
}

void Preintegrator::reset(const Vec3& gyro_bias, const Vec3& accel_bias) {
  acc_ = PreintegratedDelta{};
  acc_.gyro_bias = gyro_bias;
  acc_.accel_bias = accel_bias;
}

void Preintegrator::integrate(const ImuSample& sample, double dt) {
  if (acc_.sample_count == 0) acc_.start_ns = sample.timestamp_ns;
  acc_ = integrate_sample(acc_, sample, dt, noise_);
  acc_.end_ns = acc_.start_ns + static_cast<std::int64_t>(std::llround(acc_.duration_s * 1e9));
}

namespace {

/// Calls f(sample, dt_s, segment_start_ns) for each held segment in [t0, t1).
template <typename F>
void for_each_segment(std::span<const ImuSample> imu, std::int64_t t0, std::int64_t t1, F&& f) {
  if (imu.empty() || t1 <= t0) return;
  auto it = std::upper_bound(imu.begin(), imu.end(), t0,
                             [](std::int64_t t, const ImuSample& s) { return t < s.timestamp_ns; });
  std::size_t k = it == imu.begin() ? 0 : static_cast<std::size_t>(it - imu.begin()) - 1;
  for (; k < imu.size(); ++k) {
    const std::int64_t seg_start = std::max(imu[k].timestamp_ns, t0);
    const std::int64_t next = k + 1 < imu.size() ? imu[k + 1].timestamp_ns : t1;
    const std::int64_t seg_end = std::min(next, t1);
    if (seg_start >= t1) break;
    if (seg_end > seg_start) f(imu[k], static_cast<double>(seg_end - seg_start) * 1e-9, seg_start);
  }
}

}  // namespace

void Preintegrator::integrate_range(std::span<const ImuSample> imu, std::int64_t t0_ns, std::int64_t t1_ns) {
  bool first = acc_.sample_count == 0;
  for_each_segment(imu, t0_ns, t1_ns, [&](const ImuSample& s, double dt, std::int64_t start) {
    if (first) {
      acc_.start_ns = start;
      first = false;
    }
    acc_ = integrate_sample(acc_, s, dt, noise_);
    acc_.end_ns = start + static_cast<std::int64_t>(std::llround(dt * 1e9));
  });
}

PreintegratedDelta Preintegrator::finalize(std::int64_t from_kf, std::int64_t to_kf) {
  if (acc_.sample_count == 0) fail(ErrorCode::kInsufficientData, "finalize: no IMU samples integrated");
  PreintegratedDelta out = acc_;
  out.from_kf = from_kf;
  out.to_kf = to_kf;
  reset(acc_.gyro_bias, acc_.accel_bias);
  return out;
}

Rotation gyro_delta_rotation(std::span<const ImuSample> imu, std::int64_t t0_ns, std::int64_t t1_ns,
                             const Vec3& gyro_bias) {
  Rotation R = Rotation::Identity();
  for_each_segment(imu, t0_ns, t1_ns, [&](const ImuSample& s, double dt, std::int64_t) {
    R = R * so3_exp((s.angular_velocity - gyro_bias) * dt);
  });
  return orthonormalize(R);
}

}  // namespace kfvio

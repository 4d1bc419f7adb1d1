#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "kfvio/dataset/types.hpp"
#include "kfvio/geometry/so3.hpp"

namespace kfvio {

using Mat9 = Eigen::Matrix<double, 9, 9>;

/// Relative motion between two keyframes summarised from the IMU samples in
/// between. Covariance ordering is (dtheta, dv, dp).
struct PreintegratedDelta {
  Rotation delta_rotation = Rotation::Identity();
  Vec3 delta_velocity = Vec3::Zero();
  Vec3 delta_position = Vec3::Zero();
  double duration_s = 0.0;
  int sample_count = 0;
  Mat9 covariance = Mat9::Zero();

  Mat3 dR_dbg = Mat3::Zero();
  Mat3 dv_dbg = Mat3::Zero();
  Mat3 dv_dba = Mat3::Zero();
  Mat3 dp_dbg = Mat3::Zero();
  Mat3 dp_dba = Mat3::Zero();

  /// Biases the samples were integrated with.
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();

  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
  std::int64_t from_kf = -1;
  std::int64_t to_kf = -1;

  /// First-order bias update of the measurement.
  Rotation corrected_rotation(const Vec3& gyro_bias_new) const;
  Vec3 corrected_velocity(const Vec3& gyro_bias_new, const Vec3& accel_bias_new) const;
  Vec3 corrected_position(const Vec3& gyro_bias_new, const Vec3& accel_bias_new) const;
};

/// One Euler step of the on-manifold recursion, with first-order covariance
/// and bias-Jacobian propagation. Throws kInvalidArgument for dt <= 0 or a
/// non-finite sample.
PreintegratedDelta integrate_sample(const PreintegratedDelta& acc, const ImuSample& sample, double dt,
                                    const ImuNoise& noise);

/// Stateful accumulator owned by the IMU frontend between keyframes.
class Preintegrator {
 public:
  explicit Preintegrator(ImuNoise noise = {}, const Vec3& gyro_bias = Vec3::Zero(),
                         const Vec3& accel_bias = Vec3::Zero());

  void integrate(const ImuSample& sample, double dt);

  /// Integrates the zero-order-hold signal of `imu` over [t0, t1): sample k
  /// is held from its timestamp until the next one.
  void integrate_range(std::span<const ImuSample> imu, std::int64_t t0_ns, std::int64_t t1_ns);

  /// Emits the accumulated delta and restarts from the given biases.
  /// Throws kInsufficientData if nothing was integrated.
  PreintegratedDelta finalize(std::int64_t from_kf, std::int64_t to_kf);
  void reset(const Vec3& gyro_bias, const Vec3& accel_bias);

  const PreintegratedDelta& current() const { return acc_; }
  bool empty() const { return acc_.sample_count == 0; }

 private:
  ImuNoise noise_;
  PreintegratedDelta acc_;
};

/// Bias-corrected gyro-only integration over [t0, t1) (same hold convention).
/// Returns identity when the span holds no samples.
Rotation gyro_delta_rotation(std::span<const ImuSample> imu, std::int64_t t0_ns, std::int64_t t1_ns,
                             const Vec3& gyro_bias = Vec3::Zero());

}  // namespace kfvio

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kfvio/framecodec/frame.hpp"
#include "kfvio/geometry/camera.hpp"
#include "kfvio/geometry/so3.hpp"

namespace kfvio {

struct ImuSample {
  std::int64_t timestamp_ns = 0;
  Vec3 angular_velocity = Vec3::Zero();     // rad/s, body frame
  Vec3 linear_acceleration = Vec3::Zero();  // m/s^2, specific force, body frame

  bool operator==(const ImuSample&) const = default;
};

struct FrameEvent {
  std::int64_t timestamp_ns = 0;
  Frame left;
  std::optional<Frame> right;  // present iff stereo
};

struct GroundTruthSample {
  std::int64_t timestamp_ns = 0;
  Vec3 position = Vec3::Zero();
  Rotation rotation = Rotation::Identity();
  Vec3 velocity = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
};

/// Time-indexed body trajectory.
class GroundTruth {
 public:
  GroundTruth() = default;
  /// Samples must be strictly increasing in time (kInvalidArgument otherwise).
  explicit GroundTruth(std::vector<GroundTruthSample> samples);

  const std::vector<GroundTruthSample>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }
  std::int64_t start_ns() const { return samples_.front().timestamp_ns; }
  std::int64_t end_ns() const { return samples_.back().timestamp_ns; }
  bool covers(std::int64_t t_ns) const {
    return !samples_.empty() && t_ns >= start_ns() && t_ns <= end_ns();
  }

  /// Linear interpolation of position/velocity/biases, slerp of rotation.
  /// Throws kOutOfRange outside the covered span.
  GroundTruthSample interpolate(std::int64_t t_ns) const;

 private:
  std::vector<GroundTruthSample> samples_;
};

/// IMU noise model (continuous-time densities).
struct ImuNoise {
  double gyro_noise_density = 1.6968e-4;   // rad/s/sqrt(Hz)
  double accel_noise_density = 2.0e-3;     // m/s^2/sqrt(Hz)
  double gyro_random_walk = 1.9393e-5;     // rad/s^2/sqrt(Hz)
  double accel_random_walk = 3.0e-3;       // m/s^3/sqrt(Hz)
};

/// A recorded or generated run: IMU stream, frames (loaded lazily), ground
/// truth, and calibration.
class SensorSequence {
 public:
  virtual ~SensorSequence() = default;

  virtual const std::vector<ImuSample>& imu() const = 0;
  virtual std::size_t frame_count() const = 0;
  virtual std::int64_t frame_timestamp(std::size_t index) const = 0;
  /// Decodes frame `index`; the right image is only produced when requested
  /// and available.
  virtual FrameEvent frame(std::size_t index, bool with_right) const = 0;
  virtual const GroundTruth& ground_truth() const = 0;
  virtual const StereoCalib& calibration() const = 0;
  virtual const ImuNoise& imu_noise() const = 0;
  virtual bool has_stereo() const = 0;
};

}  // namespace kfvio

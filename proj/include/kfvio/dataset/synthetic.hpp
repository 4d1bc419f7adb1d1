#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kfvio/dataset/types.hpp"

namespace kfvio {

/// Exact kinematics of the body at time t.
struct TrajectoryPoint {
  Rotation rotation = Rotation::Identity();
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();      // world frame
  Vec3 angular_velocity = Vec3::Zero();  // body frame
};

struct ScenarioConfig {
  /// static | rotate | circle | wave
  std::string trajectory = "wave";
  double duration_s = 10.0;
  double imu_rate_hz = 200.0;
  double camera_rate_hz = 20.0;
  /// Seconds of rest before motion starts (wave only).
  double static_prefix_s = 1.0;

  double circle_radius = 2.0;   // m
  double angular_rate = 0.5;    // rad/s, circle and rotate
  Vec3 wave_amplitude{0.5, 0.35, 0.12};
  Vec3 wave_frequency{0.55, 0.8, 1.1};  // rad/s
  Vec3 attitude_amplitude{0.03, 0.03, 0.12};  // roll, pitch, yaw (rad)
  Vec3 attitude_frequency{0.9, 0.7, 0.45};

  int landmark_count = 50;
  /// frustum: landmarks back-projected from poses along the path;
  /// box: uniform inside [box_min, box_max] in world coordinates.
  std::string landmark_placement = "frustum";
  double min_depth = 3.0, max_depth = 8.0;
  Vec3 box_min{4.0, -4.0, -2.0};
  Vec3 box_max{8.0, 4.0, 2.0};

  double gravity = 9.81;
  ImuNoise noise;                 // used for covariance by consumers
  bool add_imu_noise = false;     // white noise at noise.*_noise_density
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  double pixel_noise = 0.0;       // px, std-dev on synthetic observations

  bool stereo = true;
  double baseline = 0.11;         // m
  double focal = 458.0;           // px
  int width = 752, height = 480;
  double dot_radius = 2.0;        // px

  std::uint64_t seed = 1;
};

/// Loads a scenario from a YAML file; unknown keys are rejected.
ScenarioConfig load_scenario_config(const std::filesystem::path& file);
/// Named presets: static, rotate, circle, wave, wave_noisy.
ScenarioConfig scenario_preset(const std::string& name);

/// Observation of a landmark produced without image processing.
struct SyntheticObservation {
  std::uint32_t landmark = 0;
  Vec2 left = Vec2::Zero();
  std::optional<Vec2> right;
};

/// Closed-form trajectory with its IMU stream, camera frames and landmarks.
class SyntheticScenario final : public SensorSequence {
 public:
  /// Throws kDegenerateScenario if no landmark is ever in front of the camera,
  /// kConfig on unusable parameters.
  explicit SyntheticScenario(ScenarioConfig config);

  const std::vector<ImuSample>& imu() const override { return imu_; }
  std::size_t frame_count() const override { return frame_times_.size(); }
  std::int64_t frame_timestamp(std::size_t i) const override { return frame_times_.at(i); }
  FrameEvent frame(std::size_t index, bool with_right) const override;
  const GroundTruth& ground_truth() const override { return ground_truth_; }
  const StereoCalib& calibration() const override { return calib_; }
  const ImuNoise& imu_noise() const override { return config_.noise; }
  bool has_stereo() const override { return config_.stereo; }

  const ScenarioConfig& config() const { return config_; }
  const std::vector<Vec3>& landmarks() const { return landmarks_; }
  TrajectoryPoint trajectory(double t_s) const;

  /// Exact projections plus configured pixel noise, for every landmark in
  /// view in frame `index`. Deterministic per frame.
  std::vector<SyntheticObservation> observations(std::size_t index) const;

  /// Dot-pattern rendering of the landmarks seen from a camera.
  Frame render(const Pose& world_T_cam, const CameraCalib& calib) const;

 private:
  Pose camera_pose(std::size_t frame_index, bool right) const;

  ScenarioConfig config_;
  StereoCalib calib_;
  std::vector<ImuSample> imu_;
  std::vector<std::int64_t> frame_times_;
  std::vector<Vec3> landmarks_;
  GroundTruth ground_truth_;
};

/// Calibration used by generated scenarios: camera looking along body +x,
/// zero distortion, principal point at the image centre.
StereoCalib synthetic_calibration(double focal, int width, int height, double baseline);

}  // namespace kfvio

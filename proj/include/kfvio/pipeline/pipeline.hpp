#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kfvio/backend/smoother.hpp"
#include "kfvio/dataset/synthetic.hpp"
#include "kfvio/ife/preintegration.hpp"
#include "kfvio/pipeline/config.hpp"
#include "kfvio/pipeline/evaluation.hpp"
#include "kfvio/vfe/frontend.hpp"

namespace kfvio {

/// frame_index counts processed frames from 0; translation is the predicted
/// travel since the last keyframe.
bool select_keyframe(const KeyframePolicy& policy, std::size_t frame_index, double translation);

/// Gravity-aligned rotation with zero yaw from a mean accelerometer reading.
Rotation gravity_aligned_rotation(const Vec3& mean_specific_force);

/// Propagates a state through a preintegrated delta (biases unchanged).
KFState predict_state(const KFState& x, const PreintegratedDelta& d, const Vec3& gravity);

struct FrameRecord {
  std::int64_t timestamp_ns = 0;
  bool keyframe = false;
  std::size_t features = 0;  // tracked after the frame
};

struct KeyframeRecord {
  std::int64_t id = 0;
  std::int64_t timestamp_ns = 0;
  std::size_t frame_index = 0;
  std::size_t observations = 0;
  KFState state;  // estimate emitted when the keyframe was processed
  StepReport step;
};

class VioPipeline {
 public:
  /// Throws kConfig on an invalid configuration, or when the oracle frontend
  /// is selected without a scenario.
  VioPipeline(PipelineConfig config, const StereoCalib& calib, const ImuNoise& noise,
              const SyntheticScenario* oracle = nullptr);

  /// Gravity direction from the mean accelerometer of these samples. Without
  /// a call (or with no samples) the first keyframe starts level.
  void bootstrap(std::span<const ImuSample> imu_prefix);

  /// IMU samples are those received since the previous frame, in order.
  /// frame_index identifies the frame for the oracle frontend. Returns the
  /// keyframe estimate, or nothing on non-keyframes. Throws kStream on a
  /// timestamp regression.
  std::optional<KFState> process_frame(const FrameEvent& event, std::span<const ImuSample> imu,
                                       std::size_t frame_index);

  const std::vector<FrameRecord>& frames() const { return frames_; }
  const std::vector<KeyframeRecord>& keyframes() const { return keyframes_; }
  /// Latest smoothed estimate of every keyframe so far.
  std::vector<TrajectorySample> trajectory() const;
  const std::map<std::uint32_t, Vec3>& map() const { return map_; }
  const VfeCounters& vfe_counters() const;
  const BackendCounters& backend_counters() const { return smoother_.counters(); }
  std::int64_t imu_samples() const { return imu_samples_; }
  const Smoother& smoother() const { return smoother_; }
  const PipelineConfig& config() const { return config_; }
  const Rectifier& rectifier() const { return rectifier_; }

 private:
  std::vector<std::pair<std::uint32_t, Vec3>> oracle_observations(std::size_t frame_index);
  std::vector<std::pair<std::uint32_t, Vec3>> image_observations(const FrameEvent& ev, const Mat3& body_R_delta);
  void absorb_estimates();

  PipelineConfig config_;
  const SyntheticScenario* oracle_;
  Rectifier rectifier_;
  std::unique_ptr<VisionFrontend> frontend_;
  Smoother smoother_;
  ImuNoise noise_;
  Preintegrator preintegrator_;

  std::vector<ImuSample> imu_;  // recent samples, enough for zero-order hold
  std::int64_t imu_samples_ = 0;
  std::optional<std::int64_t> last_frame_ns_;
  std::optional<Rotation> initial_rotation_;
  std::size_t frame_count_ = 0;
  std::int64_t next_kf_id_ = 0;

  std::vector<FrameRecord> frames_;
  std::vector<KeyframeRecord> keyframes_;
  std::map<std::int64_t, TrajectorySample> estimates_;  // by keyframe id
  std::map<std::uint32_t, Vec3> map_;

  struct OracleTrack {
    std::uint32_t id = 0;
    int age = 0;
  };
  std::map<std::uint32_t, OracleTrack> oracle_tracks_;  // by scenario landmark
  std::uint32_t next_oracle_id_ = 0;
  VfeCounters oracle_counters_;
};

}  // namespace kfvio

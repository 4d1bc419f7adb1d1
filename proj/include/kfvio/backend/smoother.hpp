#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "kfvio/backend/factors.hpp"
#include "kfvio/backend/hessian.hpp"
#include "kfvio/backend/track_store.hpp"

namespace kfvio {

struct BackendConfig {
  int horizon = 20;      // keyframes, <= 20
  int feature_age = 10;  // keyframes, <= 10
  VisionParams vision;
  double damping = 1e-6;
  Vec3 gravity{0.0, 0.0, -9.81};
  // first-keyframe prior (standard deviations)
  double prior_rotation_sigma = 1e-3;
  double prior_position_sigma = 1e-3;
  double prior_velocity_sigma = 0.05;
  double prior_gyro_bias_sigma = 1e-2;
  double prior_accel_bias_sigma = 0.1;
  int max_observations = 4000;
};

struct HorizonKeyframe {
  std::int64_t id = 0;
  std::int64_t timestamp_ns = 0;
  KFState state;
  /// Preintegration from the previous keyframe in the horizon.
  std::optional<PreintegratedDelta> imu;
};

struct StepReport {
  double cost = 0.0;          // at the linearization point
  double delta_norm = 0.0;
  int imu_factors = 0;
  int vision_factors = 0;
  int skipped_tracks = 0;
  SolverStats solver;
  std::int64_t linearize_macs = 0;
};

struct BackendCounters {
  std::int64_t steps = 0;
  std::int64_t imu_linearizations = 0;
  std::int64_t vision_linearizations = 0;
  std::int64_t marginalizations = 0;
  std::int64_t linearize_macs = 0;
  std::int64_t marginalize_macs = 0;
  std::int64_t factor_macs = 0;
  std::int64_t dense_factor_macs = 0;
  std::int64_t solve_macs = 0;
  std::int64_t dense_solve_macs = 0;
};

/// Fixed-lag smoother over a horizon of keyframe states with structureless
/// vision factors, IMU factors and a marginalization prior. Each keyframe
/// gets one Gauss-Newton iteration.
class Smoother {
 public:
  /// Throws kConfig unless 2 <= horizon <= 20 and 1 <= feature_age <= 10.
  Smoother(BackendConfig config, StereoCamera camera, ImuNoise noise);

  /// Appends a keyframe, marginalizing the oldest one first when the horizon
  /// is full. Every keyframe after the first needs the preintegrated delta
  /// from its predecessor (kInvalidArgument otherwise). Observations are
  /// (landmark id, (u_left, u_right, v)).
  void add_keyframe(std::int64_t id, std::int64_t timestamp_ns, const KFState& initial,
                    std::optional<PreintegratedDelta> imu,
                    const std::vector<std::pair<std::uint32_t, Vec3>>& observations);

  /// One linearize / solve / retract iteration over the horizon.
  StepReport step();

  /// Full objective at the current states, landmarks re-triangulated.
  double total_cost() const;

  const std::deque<HorizonKeyframe>& horizon() const { return window_; }
  const KFState& state(std::int64_t id) const;
  void set_state(std::int64_t id, const KFState& x);
  const HorizonKeyframe& latest() const;

  /// Triangulated positions of live tracks with at least two observations.
  std::map<std::uint32_t, Vec3> landmarks() const;
  /// Landmarks dropped by marginalization since the last call.
  std::vector<std::uint32_t> take_evicted();

  const TrackStore& tracks() const { return tracks_; }
  const std::optional<PriorFactor>& prior() const { return prior_; }
  const BackendCounters& counters() const { return counters_; }
  const BackendConfig& config() const { return config_; }
  const StereoCamera& camera() const { return camera_; }

 private:
  struct Sink;
  int slot_of(std::int64_t kf) const;
  std::shared_ptr<const HessianPattern> pattern_for(int size);
  /// Linearizes factors (all, or only those touching slot 0) into `sink`.
  double linearize(Sink& sink, bool oldest_only, StepReport* report) const;
  void marginalize_oldest();

  BackendConfig config_;
  StereoCamera camera_;
  ImuNoise noise_;
  std::deque<HorizonKeyframe> window_;
  TrackStore tracks_;
  std::optional<PriorFactor> prior_;
  std::map<int, std::shared_ptr<const HessianPattern>> patterns_;
  std::vector<std::uint32_t> evicted_;
  BackendCounters counters_;
};

}  // namespace kfvio

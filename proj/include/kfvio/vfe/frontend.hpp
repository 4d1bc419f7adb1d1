#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kfvio/vfe/detector.hpp"
#include "kfvio/vfe/ransac.hpp"
#include "kfvio/vfe/rectify.hpp"
#include "kfvio/vfe/stereo.hpp"
#include "kfvio/vfe/tracker.hpp"

namespace kfvio {

struct VfeConfig {
  int pyramid_levels = 3;
  int lk_window = 15;
  int lk_iterations = 30;
  double lk_epsilon = 0.01;
  int template_width = 51, template_height = 5;
  int search_width = 421, search_height = 5;
  int max_features = 200;
  DetectorParams detector;
  int mono_ransac_iterations = 100;
  double mono_ransac_threshold_px = 1.5;
  int stereo_ransac_iterations = 50;
  double stereo_ransac_threshold_px = 3.0;
  double stereo_ratio = 0.8;
  double min_disparity = 1.0;  // px
  int max_track_age = 10;      // keyframes per landmark id
  bool compression = true;
  int codec_block = 4, codec_bits = 5;  // only the sweep moves these
  std::uint64_t seed = 1;

  /// Throws kConfig for values above the hardware maxima (3 levels, 15 px
  /// window, 30 iterations, 51x5 template, 421x5 search, 200 features) or
  /// otherwise unusable.
  void validate() const;
  LkParams lk() const;
  StereoMatchParams stereo_match() const;
};

struct Feature {
  std::uint32_t id = 0;
  Vec2 pixel = Vec2::Zero();  // raw left frame
  std::optional<Vec2> right_pixel;
  int age = 0;  // keyframes observed under this id
};

class TrackingData {
 public:
  explicit TrackingData(std::size_t capacity = 200) : capacity_(capacity) {}
  /// Throws kCapacity when full.
  Feature& add(const Vec2& pixel);
  /// Gives the feature a fresh id and zero age.
  void renew(Feature& f);
  bool remove(std::uint32_t id);
  std::vector<Feature>& features() { return features_; }
  const std::vector<Feature>& features() const { return features_; }
  std::size_t size() const { return features_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint32_t next_id() const { return next_id_; }

 private:
  std::size_t capacity_;
  std::uint32_t next_id_ = 0;
  std::vector<Feature> features_;
};

/// Work done by each stage, used for mode checks and the timing model.
struct VfeCounters {
  std::int64_t ft_runs = 0, ft_features = 0, ft_iterations = 0;
  std::int64_t fd_runs = 0, fd_pixels = 0, fd_new = 0;
  std::int64_t ur_runs = 0, ur_pixels = 0;
  std::int64_t sm_runs = 0, sm_queries = 0, sm_matches = 0, sm_sad_ops = 0;
  std::int64_t gv_runs = 0, gv_mono_hypotheses = 0, gv_stereo_hypotheses = 0, gv_rejected = 0;
  std::int64_t codec_frames = 0;
};

/// Per-keyframe record for the backend. coords = (uL, uR, v) in the rectified
/// left frame with uR NaN when there is no stereo match.
struct KeyframeObservation {
  std::uint32_t id = 0;
  Vec3 coords = Vec3::Zero();
  std::optional<Vec3> point;  // rectified left camera frame, m
};

class VisionFrontend {
 public:
  VisionFrontend(const VfeConfig& config, const StereoCalib& calib, bool stereo);

  /// Non-keyframe: feature tracking only.
  void process_frame(const Frame& left);
  /// Keyframe: track, rectify, stereo-match, verify, top up with detections.
  /// body_R_delta is the gyro rotation from the previous keyframe body frame
  /// to the current one. `right` is ignored in mono mode.
  std::vector<KeyframeObservation> process_keyframe(const Frame& left, const Frame* right, const Mat3& body_R_delta);
  /// Forget landmarks the backend has dropped.
  void drop(const std::vector<std::uint32_t>& ids);

  const TrackingData& tracking() const { return tracking_; }
  const VfeCounters& counters() const { return counters_; }
  const Rectifier& rectifier() const { return rectifier_; }
  const VfeConfig& config() const { return config_; }

 private:
  struct KfMemo {
    Vec2 rect = Vec2::Zero();
    std::optional<Vec3> point;
  };
  Image frame_image(const Frame& f);
  void track(const Frame& left);

  VfeConfig config_;
  bool stereo_;
  Rectifier rectifier_;
  TrackingData tracking_;
  VfeCounters counters_;
  Pyramid last_pyramid_;
  std::vector<std::pair<std::uint32_t, KfMemo>> last_kf_;
  std::uint64_t kf_count_ = 0;
};

}  // namespace kfvio

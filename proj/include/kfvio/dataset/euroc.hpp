#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "kfvio/dataset/types.hpp"

namespace kfvio {

/// EuRoC/ASL layout: <dir>/{cam0,cam1,imu0,state_groundtruth_estimate0}/data.csv
/// (an extra "mav0" level is accepted). Images are decoded on demand.
class EurocSequence final : public SensorSequence {
 public:
  const std::vector<ImuSample>& imu() const override { return imu_; }
  std::size_t frame_count() const override { return frames_.size(); }
  std::int64_t frame_timestamp(std::size_t i) const override { return frames_.at(i).timestamp_ns; }
  FrameEvent frame(std::size_t index, bool with_right) const override;
  const GroundTruth& ground_truth() const override { return ground_truth_; }
  const StereoCalib& calibration() const override { return calib_; }
  const ImuNoise& imu_noise() const override { return noise_; }
  bool has_stereo() const override { return stereo_; }

  struct FrameFiles {
    std::int64_t timestamp_ns = 0;
    std::filesystem::path left;
    std::filesystem::path right;  // empty in mono recordings
  };
  const std::vector<FrameFiles>& frame_files() const { return frames_; }

 private:
  friend std::unique_ptr<EurocSequence> load_euroc(const std::filesystem::path& dir);

  std::vector<ImuSample> imu_;
  std::vector<FrameFiles> frames_;
  GroundTruth ground_truth_;
  StereoCalib calib_;
  ImuNoise noise_;
  bool stereo_ = false;
};

/// Throws kIo for missing files/directories, kParse (with file and line
/// number) for malformed rows, kStream for non-increasing timestamps.
std::unique_ptr<EurocSequence> load_euroc(const std::filesystem::path& dir);

/// Writes any sequence back in the ASL layout (PNG images, CSV streams,
/// sensor.yaml calibration).
void write_euroc(const std::filesystem::path& dir, const SensorSequence& seq);

/// Published calibration of the EuRoC MAV stereo rig.
StereoCalib euroc_default_calibration();

// CSV helpers, exposed for tests.
std::vector<ImuSample> read_imu_csv(const std::filesystem::path& file);
void write_imu_csv(const std::filesystem::path& file, const std::vector<ImuSample>& samples);
GroundTruth read_ground_truth_csv(const std::filesystem::path& file);
void write_ground_truth_csv(const std::filesystem::path& file, const GroundTruth& gt);

}  // namespace kfvio

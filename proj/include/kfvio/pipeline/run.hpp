#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kfvio/dataset/synthetic.hpp"
#include "kfvio/pipeline/model.hpp"
#include "kfvio/pipeline/pipeline.hpp"

namespace kfvio {

struct DatasetHandle {
  std::string name;
  std::unique_ptr<SensorSequence> sequence;
  const SyntheticScenario* synthetic = nullptr;  // set for synthetic:NAME
};

/// "synthetic:NAME" (scenario preset or a scenario YAML path) or an EuRoC
/// directory.
DatasetHandle open_dataset(const std::string& spec);

struct RunReport {
  std::string dataset;
  PipelineConfig config;
  std::vector<FrameRecord> frames;
  std::vector<KeyframeRecord> keyframes;
  std::vector<TrajectorySample> trajectory;
  std::map<std::uint32_t, Vec3> map;
  std::optional<TrajectoryError> error;
  VfeCounters vfe;
  BackendCounters backend;
  std::int64_t imu_samples = 0;
  ModelReport model;
};

struct RunOptions {
  std::optional<std::size_t> max_frames;
};

/// Streams the whole sequence through a VioPipeline. Deterministic for a
/// given config and dataset.
RunReport run_sequence(const PipelineConfig& config, const SensorSequence& data,
                       const SyntheticScenario* oracle = nullptr, const RunOptions& options = {});

/// Report as JSON text (no wall-clock fields, so reruns compare equal).
std::string report_json(const RunReport& report);
/// trajectory.csv, map.ply and report.json under `dir` (created if needed).
void write_run_outputs(const RunReport& report, const std::filesystem::path& dir);
void write_trajectory_csv(const std::filesystem::path& file, const std::vector<TrajectorySample>& trajectory);
void write_map_ply(const std::filesystem::path& file, const std::map<std::uint32_t, Vec3>& map);

struct CompressionSetting {
  int block = 4;  // 1 = truncation only
  int bits = 5;
};

struct SweepPoint {
  CompressionSetting setting;
  double bits_per_pixel = 0.0;
  double memory_saving = 0.0;  // vs 8 bits per pixel
  std::optional<TrajectoryError> error;
  std::string failure;  // set when the run threw
};

/// Truncation depths 8..3 bits, then 4x4, 8x8 and 16x16 blocks on 5 bits.
std::vector<CompressionSetting> default_sweep();
std::vector<SweepPoint> sweep_compression(const PipelineConfig& config, const SensorSequence& data,
                                          const std::vector<CompressionSetting>& settings,
                                          const RunOptions& options = {});
std::string sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace kfvio

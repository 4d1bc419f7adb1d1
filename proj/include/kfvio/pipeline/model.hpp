#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kfvio/pipeline/config.hpp"

namespace kfvio {

/// One row of the before/after memory table. Sizes in bytes.
struct MemoryRow {
  std::string block;
  double before = 0.0;
  double after = 0.0;
  double reference_ratio = 0.0;  // 0 when no published figure exists
  double ratio() const { return after > 0 ? before / after : 0.0; }
};

/// Modeled backend work for one keyframe step, in multiply-accumulates.
struct BackendMacModel {
  double tracks = 0.0;
  int observations_per_track = 0;
  double vision_macs = 0.0;
  double imu_macs = 0.0;
  double factor_macs = 0.0;  // zero-skipping Cholesky
  double solve_macs = 0.0;
  double dense_factor_macs = 0.0;
  double total() const { return vision_macs + imu_macs + factor_macs + solve_macs; }
};

struct ModelReport {
  int width = 752, height = 480;
  std::vector<MemoryRow> memory;  // frame buffers, track store, Hessian
  // track store, both accountings
  double track_store_flat_bits = 0.0;
  double track_store_two_stage_bits = 0.0;       // 5-bit id + 12-bit pointer per row, 192-bit payloads
  double track_store_pointer_only_bits = 0.0;    // 12-bit rows, 197-bit payloads
  double codec_raw_ratio = 0.0;                  // 128 / 26 per block
  double hessian_envelope_density = 0.0;
  double hessian_pattern_density = 0.0;
  std::int64_t dense_solver_macs = 0;
  std::int64_t sparse_solver_macs = 0;
  BackendMacModel backend;
};

ModelReport model_report(const PipelineConfig& config, int width = 752, int height = 480);

/// Work model used for adaptation comparisons. Monotone in features per
/// frame and horizon.
BackendMacModel backend_mac_model(int features, int horizon, int feature_age, bool stereo);

/// Plain-text rendering in the layout of the memory table.
std::string format_model_report(const ModelReport& report);

}  // namespace kfvio

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kfvio/backend/smoother.hpp"
#include "kfvio/vfe/frontend.hpp"

namespace kfvio {

struct KeyframePolicy {
  enum class Kind { kRate, kDistance };
  Kind kind = Kind::kRate;
  int rate = 4;            // every k-th frame
  double distance = 0.05;  // m of predicted travel

  /// "rate:k" or "dist:m". Throws kConfig otherwise.
  static KeyframePolicy parse(const std::string& text);
  std::string str() const;
};

/// Where keyframe observations come from: the image frontend, or exact
/// projections from a synthetic scenario.
enum class FrontendKind { kImage, kOracle };

struct PipelineConfig {
  VfeConfig vfe;
  BackendConfig backend;
  int max_tracks = 4000;  // observation rows in the track store
  bool stereo = true;
  KeyframePolicy keyframes;
  FrontendKind frontend = FrontendKind::kImage;
  int gn_iterations = 1;  // per keyframe
  double bootstrap_window_s = 0.5;
  std::uint64_t seed = 1;

  /// Throws kConfig above the hardware maxima (horizon 20, feature age 10,
  /// 4000 tracks, 200 features per frame) or on inconsistent values.
  void validate() const;
  /// Copies the shared fields (feature age, seed, track limit) into the
  /// stage configs.
  void sync();
};

/// YAML with optional `preset:` base and sections `vfe:` / `backend:`.
/// Unknown keys are rejected with kConfig.
PipelineConfig load_pipeline_config(const std::filesystem::path& file);
PipelineConfig parse_pipeline_config(const std::string& yaml_text);

/// "max" (hardware maxima), "easy" (35 features, horizon 10), or an EuRoC
/// sequence name such as "MH_04" / "V2_3" with its adapted pair.
PipelineConfig adaptation_preset(const std::string& name);
std::vector<std::string> adaptation_preset_names();

}  // namespace kfvio

#include "kfvio/pipeline/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <regex>
#include <sstream>

#include "kfvio/core/error.hpp"

namespace kfvio {

KeyframePolicy KeyframePolicy::parse(const std::string& text) {
  static const std::regex re(R"((rate|dist):([0-9]*\.?[0-9]+))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) fail(ErrorCode::kConfig, "keyframe policy must be rate:k or dist:m, got '" + text + "'");
  KeyframePolicy p;
  if (m[1] == "rate") {
    p.kind = Kind::kRate;
    const double k = std::stod(m[2]);
    if (k < 1 || k != std::floor(k)) fail(ErrorCode::kConfig, "rate:k needs an integer k >= 1");
    p.rate = static_cast<int>(k);
  } else {
    p.kind = Kind::kDistance;
    p.distance = std::stod(m[2]);
    if (!(p.distance > 0)) fail(ErrorCode::kConfig, "dist:m needs m > 0");
  }
  return p;
}

std::string KeyframePolicy::str() const {
  if (kind == Kind::kRate) return "rate:" + std::to_string(rate);
  std::ostringstream os;
  os << "dist:" << distance;
  return os.str();
}

void PipelineConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kConfig, "pipeline config: " + what);
  };
  need(backend.horizon >= 2 && backend.horizon <= 20, "horizon must be in [2, 20]");
  need(backend.feature_age >= 1 && backend.feature_age <= 10, "feature age must be in [1, 10]");
  need(backend.feature_age <= backend.horizon, "feature age cannot exceed the horizon");
  need(max_tracks >= 1 && max_tracks <= 4000, "max tracks must be in [1, 4000]");
  need(vfe.max_track_age == backend.feature_age, "frontend and backend feature ages differ");
  need(gn_iterations >= 1 && gn_iterations <= 10, "gn_iterations must be in [1, 10]");
  need(bootstrap_window_s >= 0, "bootstrap window must be non-negative");
  need(backend.vision.pixel_sigma > 0 && backend.vision.huber_threshold > 0, "vision noise must be positive");
  need(keyframes.kind != KeyframePolicy::Kind::kRate || keyframes.rate >= 1, "keyframe rate must be >= 1");
  need(keyframes.kind != KeyframePolicy::Kind::kDistance || keyframes.distance > 0, "keyframe distance must be > 0");
  vfe.validate();
}

void PipelineConfig::sync() {
  vfe.max_track_age = backend.feature_age;
  vfe.seed = seed;
  backend.max_observations = max_tracks;
}

namespace {

using Setter = std::function<void(const YAML::Node&)>;

void apply(const YAML::Node& node, const std::map<std::string, Setter>& setters, const std::string& where) {
  if (!node.IsMap()) fail(ErrorCode::kConfig, where + " must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorCode::kConfig, "unknown key '" + key + "' in " + where);
    it->second(kv.second);
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const YAML::Node& n) { field = n.as<T>(); };
}

PipelineConfig from_yaml(const YAML::Node& root) {
  PipelineConfig c;
  if (!root || root.IsNull()) {
    c.sync();
    return c;
  }
  if (!root.IsMap()) fail(ErrorCode::kConfig, "pipeline config must be a mapping");
  if (root["preset"]) c = adaptation_preset(root["preset"].as<std::string>());
  VfeConfig& v = c.vfe;
  BackendConfig& b = c.backend;
  std::string mode, frontend, policy;
  const std::map<std::string, Setter> vfe_keys = {
      {"pyramid_levels", set(v.pyramid_levels)},
      {"lk_window", set(v.lk_window)},
      {"lk_iterations", set(v.lk_iterations)},
      {"lk_epsilon", set(v.lk_epsilon)},
      {"template_width", set(v.template_width)},
      {"template_height", set(v.template_height)},
      {"search_width", set(v.search_width)},
      {"search_height", set(v.search_height)},
      {"features_per_frame", set(v.max_features)},
      {"grid_cols", set(v.detector.grid_cols)},
      {"grid_rows", set(v.detector.grid_rows)},
      {"min_shi_tomasi", set(v.detector.min_score)},
      {"suppression_radius", set(v.detector.suppression_radius)},
      {"mono_ransac_iterations", set(v.mono_ransac_iterations)},
      {"mono_ransac_threshold_px", set(v.mono_ransac_threshold_px)},
      {"stereo_ransac_iterations", set(v.stereo_ransac_iterations)},
      {"stereo_ransac_threshold_px", set(v.stereo_ransac_threshold_px)},
      {"stereo_ratio", set(v.stereo_ratio)},
      {"min_disparity", set(v.min_disparity)},
      {"codec_block", set(v.codec_block)},
      {"codec_bits", set(v.codec_bits)},
  };
  const std::map<std::string, Setter> backend_keys = {
      {"horizon", set(b.horizon)},
      {"feature_age", set(b.feature_age)},
      {"pixel_sigma", set(b.vision.pixel_sigma)},
      {"huber_threshold", set(b.vision.huber_threshold)},
      {"damping", set(b.damping)},
      {"gn_iterations", set(c.gn_iterations)},
  };
  const std::map<std::string, Setter> top = {
      {"preset", [](const YAML::Node&) {}},
      {"mode", set(mode)},
      {"frontend", set(frontend)},
      {"kf_policy", set(policy)},
      {"compression", set(v.compression)},
      {"seed", set(c.seed)},
      {"max_tracks", set(c.max_tracks)},
      {"bootstrap_window_s", set(c.bootstrap_window_s)},
      {"vfe", [&](const YAML::Node& n) { apply(n, vfe_keys, "vfe"); }},
      {"backend", [&](const YAML::Node& n) { apply(n, backend_keys, "backend"); }},
  };
  apply(root, top, "pipeline config");
  if (!mode.empty()) {
    if (mode != "mono" && mode != "stereo") fail(ErrorCode::kConfig, "mode must be mono or stereo");
    c.stereo = mode == "stereo";
  }
  if (!frontend.empty()) {
    if (frontend != "image" && frontend != "oracle") fail(ErrorCode::kConfig, "frontend must be image or oracle");
    c.frontend = frontend == "image" ? FrontendKind::kImage : FrontendKind::kOracle;
  }
  if (!policy.empty()) c.keyframes = KeyframePolicy::parse(policy);
  c.sync();
  c.validate();
  return c;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& yaml_text) {
  try {
    return from_yaml(YAML::Load(yaml_text));
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::kConfig, std::string("pipeline config: ") + e.what());
  }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) fail(ErrorCode::kIo, "missing pipeline config " + file.string());
  try {
    return from_yaml(YAML::LoadFile(file.string()));
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::kConfig, file.string() + ": " + e.what());
  }
}

namespace {

struct Adapted {
  const char* name;
  int features;
  int horizon;
};

// features per frame and horizon per EuRoC sequence for a 0.35% error target
constexpr Adapted kAdapted[] = {
    {"MH_01", 35, 10}, {"MH_02", 35, 10}, {"MH_03", 35, 10}, {"MH_04", 150, 10}, {"MH_05", 100, 15}, {"V1_01", 35, 10},
    {"V1_02", 35, 10}, {"V1_03", 35, 10}, {"V2_01", 50, 10}, {"V2_02", 35, 10},  {"V2_03", 50, 15},
};

std::string canonical(std::string name) {
  // MH_4 -> MH_04, v2_3 -> V2_03
  for (char& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  static const std::regex short_form(R"((MH|V1|V2)_([0-9]))");
  std::smatch m;
  if (std::regex_match(name, m, short_form)) return m[1].str() + "_0" + m[2].str();
  return name;
}

}  // namespace

PipelineConfig adaptation_preset(const std::string& name) {
  PipelineConfig c;
  if (name == "max") {
    c.sync();
    return c;
  }
  if (name == "easy") {
    c.vfe.max_features = 35;
    c.backend.horizon = 10;
    c.sync();
    return c;
  }
  const std::string key = canonical(name);
  for (const Adapted& a : kAdapted)
    if (key == a.name) {
      c.vfe.max_features = a.features;
      c.backend.horizon = a.horizon;
      c.sync();
      return c;
    }
  fail(ErrorCode::kConfig, "unknown adaptation preset '" + name + "'");
}

std::vector<std::string> adaptation_preset_names() {
  std::vector<std::string> out{"max", "easy"};
  for (const Adapted& a : kAdapted) out.emplace_back(a.name);
  return out;
}

}  // namespace kfvio

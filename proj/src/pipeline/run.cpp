#include "kfvio/pipeline/run.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <glog/logging.h>
#include <json.hpp>

#include "kfvio/core/error.hpp"
#include "kfvio/dataset/euroc.hpp"

namespace kfvio {

DatasetHandle open_dataset(const std::string& spec) {
  DatasetHandle h;
  h.name = spec;
  const std::string prefix = "synthetic:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string name = spec.substr(prefix.size());
    const bool is_file = name.find('/') != std::string::npos || name.ends_with(".yaml") || name.ends_with(".yml");
    auto scenario = std::make_unique<SyntheticScenario>(is_file ? load_scenario_config(name) : scenario_preset(name));
    h.synthetic = scenario.get();
    h.sequence = std::move(scenario);
    return h;
  }
  h.sequence = load_euroc(spec);
  return h;
}

RunReport run_sequence(const PipelineConfig& config, const SensorSequence& data, const SyntheticScenario* oracle,
                       const RunOptions& options) {
  if (config.stereo && !data.has_stereo()) fail(ErrorCode::kConfig, "stereo mode on a sequence without right frames");
  VioPipeline vio(config, data.calibration(), data.imu_noise(), oracle);
  const auto& imu = data.imu();
  if (imu.empty()) fail(ErrorCode::kInsufficientData, "sequence has no IMU samples");

  std::size_t first = 0;
  while (first < data.frame_count() && data.frame_timestamp(first) < imu.front().timestamp_ns) ++first;
  if (first == data.frame_count()) fail(ErrorCode::kInsufficientData, "no frame overlaps the IMU stream");

  const std::int64_t t0 = data.frame_timestamp(first);
  const auto window_end = t0 + static_cast<std::int64_t>(config.bootstrap_window_s * 1e9);
  auto lo = std::lower_bound(imu.begin(), imu.end(), t0,
                             [](const ImuSample& s, std::int64_t t) { return s.timestamp_ns < t; });
  auto hi = std::upper_bound(imu.begin(), imu.end(), window_end,
                             [](std::int64_t t, const ImuSample& s) { return t < s.timestamp_ns; });
  vio.bootstrap(std::span<const ImuSample>(&*lo, static_cast<std::size_t>(hi - lo)));

  std::size_t next_imu = 0;
  std::size_t end = data.frame_count();
  if (options.max_frames) end = std::min(end, first + *options.max_frames);
  for (std::size_t i = first; i < end; ++i) {
    const std::int64_t t = data.frame_timestamp(i);
    const std::size_t begin_imu = next_imu;
    while (next_imu < imu.size() && imu[next_imu].timestamp_ns <= t) ++next_imu;
    const std::span<const ImuSample> chunk(imu.data() + begin_imu, next_imu - begin_imu);
    vio.process_frame(data.frame(i, config.stereo), chunk, i);
  }

  RunReport r;
  r.config = vio.config();
  r.frames = vio.frames();
  r.keyframes = vio.keyframes();
  r.trajectory = vio.trajectory();
  r.map = vio.map();
  r.vfe = vio.vfe_counters();
  r.backend = vio.backend_counters();
  r.imu_samples = vio.imu_samples();
  r.model = model_report(r.config);
  if (!data.ground_truth().empty() && r.trajectory.size() >= 2) {
    try {
      r.error = evaluate_trajectory(r.trajectory, data.ground_truth());
    } catch (const Error& e) {
      LOG(WARNING) << "trajectory not evaluated: " << e.what();
    }
  }
  return r;
}

namespace {

using nlohmann::json;

json counters_json(const VfeCounters& c) {
  return {{"ft_runs", c.ft_runs},       {"ft_features", c.ft_features},
          {"ft_iterations", c.ft_iterations}, {"fd_runs", c.fd_runs},
          {"fd_pixels", c.fd_pixels},   {"fd_new", c.fd_new},
          {"ur_runs", c.ur_runs},       {"ur_pixels", c.ur_pixels},
          {"sm_runs", c.sm_runs},       {"sm_queries", c.sm_queries},
          {"sm_matches", c.sm_matches}, {"sm_sad_ops", c.sm_sad_ops},
          {"gv_runs", c.gv_runs},       {"gv_mono_hypotheses", c.gv_mono_hypotheses},
          {"gv_stereo_hypotheses", c.gv_stereo_hypotheses}, {"gv_rejected", c.gv_rejected},
          {"codec_frames", c.codec_frames}};
}

json counters_json(const BackendCounters& c) {
  return {{"steps", c.steps},
          {"imu_linearizations", c.imu_linearizations},
          {"vision_linearizations", c.vision_linearizations},
          {"marginalizations", c.marginalizations},
          {"linearize_macs", c.linearize_macs},
          {"marginalize_macs", c.marginalize_macs},
          {"factor_macs", c.factor_macs},
          {"dense_factor_macs", c.dense_factor_macs},
          {"solve_macs", c.solve_macs},
          {"dense_solve_macs", c.dense_solve_macs}};
}

json model_json(const ModelReport& m) {
  json rows = json::array();
  for (const MemoryRow& r : m.memory)
    rows.push_back({{"block", r.block}, {"before_bytes", r.before}, {"after_bytes", r.after}, {"saving", r.ratio()},
                    {"reference_saving", r.reference_ratio}});
  return {{"memory", rows},
          {"codec_raw_ratio", m.codec_raw_ratio},
          {"track_store_flat_bits", m.track_store_flat_bits},
          {"track_store_two_stage_bits", m.track_store_two_stage_bits},
          {"track_store_pointer_only_bits", m.track_store_pointer_only_bits},
          {"hessian_pattern_density", m.hessian_pattern_density},
          {"hessian_envelope_density", m.hessian_envelope_density},
          {"dense_solver_macs", m.dense_solver_macs},
          {"sparse_solver_macs", m.sparse_solver_macs},
          {"backend_macs_per_keyframe", m.backend.total()},
          {"backend_vision_macs", m.backend.vision_macs},
          {"backend_tracks", m.backend.tracks}};
}

}  // namespace

std::string report_json(const RunReport& r) {
  json j;
  j["dataset"] = r.dataset;
  const PipelineConfig& c = r.config;
  j["config"] = {{"mode", c.stereo ? "stereo" : "mono"},
                 {"frontend", c.frontend == FrontendKind::kImage ? "image" : "oracle"},
                 {"kf_policy", c.keyframes.str()},
                 {"compression", c.vfe.compression},
                 {"features_per_frame", c.vfe.max_features},
                 {"horizon", c.backend.horizon},
                 {"feature_age", c.backend.feature_age},
                 {"max_tracks", c.max_tracks},
                 {"gn_iterations", c.gn_iterations},
                 {"seed", c.seed}};
  std::string classes;
  classes.reserve(r.frames.size());
  for (const FrameRecord& f : r.frames) classes.push_back(f.keyframe ? 'K' : 'N');
  j["frames"] = r.frames.size();
  j["keyframes"] = r.keyframes.size();
  j["frame_classes"] = classes;
  j["imu_samples"] = r.imu_samples;
  j["map_points"] = r.map.size();
  if (r.error) {
    j["error"] = {{"ate_rmse_m", r.error->ate_rmse},
                  {"ate_rmse_yaw_m", r.error->ate_rmse_yaw},
                  {"path_length_m", r.error->path_length},
                  {"normalized_percent", r.error->normalized},
                  {"normalized_yaw_percent", r.error->normalized_yaw},
                  {"matched", r.error->matched},
                  {"reference_percent", 0.28}};
  }
  j["vfe_ops"] = counters_json(r.vfe);
  j["backend_ops"] = counters_json(r.backend);
  j["model"] = model_json(r.model);
  return j.dump(2);
}

void write_trajectory_csv(const std::filesystem::path& file, const std::vector<TrajectorySample>& trajectory) {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::kIo, "cannot write " + file.string());
  out << "timestamp_ns,px,py,pz,qw,qx,qy,qz,vx,vy,vz\n" << std::setprecision(10);
  for (const TrajectorySample& s : trajectory) {
    const Eigen::Quaterniond q = to_quaternion(s.state.rotation);
    const Vec3& p = s.state.position;
    const Vec3& v = s.state.velocity;
    out << s.timestamp_ns << ',' << p.x() << ',' << p.y() << ',' << p.z() << ',' << q.w() << ',' << q.x() << ','
        << q.y() << ',' << q.z() << ',' << v.x() << ',' << v.y() << ',' << v.z() << '\n';
  }
}

void write_map_ply(const std::filesystem::path& file, const std::map<std::uint32_t, Vec3>& map) {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::kIo, "cannot write " + file.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << map.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nproperty uint id\nend_header\n";
  out << std::setprecision(8);
  for (const auto& [id, p] : map) out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << id << '\n';
}

void write_run_outputs(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_trajectory_csv(dir / "trajectory.csv", report.trajectory);
  write_map_ply(dir / "map.ply", report.map);
  std::ofstream out(dir / "report.json");
  if (!out) fail(ErrorCode::kIo, "cannot write " + (dir / "report.json").string());
  out << report_json(report) << '\n';
}

std::vector<CompressionSetting> default_sweep() {
  return {{1, 8}, {1, 6}, {1, 5}, {1, 4}, {1, 3}, {4, 5}, {8, 5}, {16, 5}};
}

std::vector<SweepPoint> sweep_compression(const PipelineConfig& config, const SensorSequence& data,
                                          const std::vector<CompressionSetting>& settings, const RunOptions& options) {
  std::vector<SweepPoint> out;
  for (const CompressionSetting& s : settings) {
    SweepPoint p;
    p.setting = s;
    p.bits_per_pixel = btc_bits_per_pixel(s.block, s.bits);
    p.memory_saving = 8.0 / p.bits_per_pixel;
    PipelineConfig c = config;
    c.frontend = FrontendKind::kImage;
    c.vfe.compression = true;
    c.vfe.codec_block = s.block;
    c.vfe.codec_bits = s.bits;
    try {
      p.error = run_sequence(c, data, nullptr, options).error;
    } catch (const Error& e) {
      p.failure = e.what();
    }
    out.push_back(p);
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream os;
  os << "block,bits,bits_per_pixel,memory_saving,ate_rmse_m,normalized_percent,status\n";
  for (const SweepPoint& p : points) {
    os << p.setting.block << ',' << p.setting.bits << ',' << p.bits_per_pixel << ',' << p.memory_saving << ',';
    if (p.error)
      os << p.error->ate_rmse << ',' << p.error->normalized << ",ok\n";
    else
      os << ",," << (p.failure.empty() ? "no-estimate" : "failed") << '\n';
  }
  return os.str();
}

}  // namespace kfvio

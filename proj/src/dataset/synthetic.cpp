#include "kfvio/dataset/synthetic.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "kfvio/core/error.hpp"

namespace kfvio {

namespace {

constexpr double kMinDepth = 0.1;

/// f(t) = A (1 - cos(w t))^2 and its first two derivatives. All three vanish
/// at t = 0, so the motion starts smoothly from rest.
struct Profile {
  double value = 0.0, rate = 0.0, accel = 0.0;
};

Profile smooth_wave(double amplitude, double freq, double tau) {
  if (tau <= 0.0) return {};
  const double s = std::sin(freq * tau), c = std::cos(freq * tau);
  const double one_minus_c = 1.0 - c;
  return {amplitude * one_minus_c * one_minus_c, 2.0 * amplitude * freq * one_minus_c * s,
          2.0 * amplitude * freq * freq * (s * s + c - c * c)};
}

Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

std::int64_t period_ns(double rate_hz) { return static_cast<std::int64_t>(std::llround(1e9 / rate_hz)); }

bool in_image(const Vec2& px, const CameraCalib& c, double margin) {
  return px.x() >= margin && px.y() >= margin && px.x() <= c.width - 1 - margin && px.y() <= c.height - 1 - margin;
}

Vec3 read_vec3(const YAML::Node& n) { return {n[0].as<double>(), n[1].as<double>(), n[2].as<double>()}; }

}  // namespace

StereoCalib synthetic_calibration(double focal, int width, int height, double baseline) {
  // camera z = body x (forward), camera x = body -y (right), camera y = body -z (down)
  Mat3 body_R_cam;
  body_R_cam << 0.0, 0.0, 1.0,  //
      -1.0, 0.0, 0.0,           //
      0.0, -1.0, 0.0;
  StereoCalib s;
  for (CameraCalib* c : {&s.left, &s.right}) {
    c->fx = c->fy = focal;
    c->cx = 0.5 * width;
    c->cy = 0.5 * height;
    c->width = width;
    c->height = height;
    c->baseline = baseline;
  }
  s.left.body_T_cam = {body_R_cam, Vec3(0.0, 0.5 * baseline, 0.0)};
  s.right.body_T_cam = {body_R_cam, Vec3(0.0, -0.5 * baseline, 0.0)};
  return s;
}

ScenarioConfig scenario_preset(const std::string& name) {
  ScenarioConfig c;
  if (name == "static") {
    c.trajectory = "static";
  } else if (name == "rotate") {
    c.trajectory = "rotate";
  } else if (name == "circle") {
    c.trajectory = "circle";
    c.landmark_count = 120;
  } else if (name == "wave") {
    c.trajectory = "wave";
  } else if (name == "wave_noisy") {
    c.trajectory = "wave";
    c.add_imu_noise = true;
    c.pixel_noise = 0.5;
    c.gyro_bias = Vec3(0.002, -0.001, 0.0015);
    c.accel_bias = Vec3(0.02, -0.01, 0.015);
  } else {
    fail(ErrorCode::kConfig, "unknown synthetic scenario '" + name + "'");
  }
  return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) fail(ErrorCode::kIo, "missing scenario config " + file.string());
  ScenarioConfig c;
  try {
    const YAML::Node root = YAML::LoadFile(file.string());
    if (root["preset"]) c = scenario_preset(root["preset"].as<std::string>());
    std::map<std::string, std::function<void(const YAML::Node&)>> setters = {
        {"preset", [](const YAML::Node&) {}},
        {"trajectory", [&](const YAML::Node& n) { c.trajectory = n.as<std::string>(); }},
        {"duration_s", [&](const YAML::Node& n) { c.duration_s = n.as<double>(); }},
        {"imu_rate_hz", [&](const YAML::Node& n) { c.imu_rate_hz = n.as<double>(); }},
        {"camera_rate_hz", [&](const YAML::Node& n) { c.camera_rate_hz = n.as<double>(); }},
        {"static_prefix_s", [&](const YAML::Node& n) { c.static_prefix_s = n.as<double>(); }},
        {"circle_radius", [&](const YAML::Node& n) { c.circle_radius = n.as<double>(); }},
        {"angular_rate", [&](const YAML::Node& n) { c.angular_rate = n.as<double>(); }},
        {"wave_amplitude", [&](const YAML::Node& n) { c.wave_amplitude = read_vec3(n); }},
        {"wave_frequency", [&](const YAML::Node& n) { c.wave_frequency = read_vec3(n); }},
        {"attitude_amplitude", [&](const YAML::Node& n) { c.attitude_amplitude = read_vec3(n); }},
        {"attitude_frequency", [&](const YAML::Node& n) { c.attitude_frequency = read_vec3(n); }},
        {"landmark_count", [&](const YAML::Node& n) { c.landmark_count = n.as<int>(); }},
        {"landmark_placement", [&](const YAML::Node& n) { c.landmark_placement = n.as<std::string>(); }},
        {"min_depth", [&](const YAML::Node& n) { c.min_depth = n.as<double>(); }},
        {"max_depth", [&](const YAML::Node& n) { c.max_depth = n.as<double>(); }},
        {"box_min", [&](const YAML::Node& n) { c.box_min = read_vec3(n); }},
        {"box_max", [&](const YAML::Node& n) { c.box_max = read_vec3(n); }},
        {"gravity", [&](const YAML::Node& n) { c.gravity = n.as<double>(); }},
        {"add_imu_noise", [&](const YAML::Node& n) { c.add_imu_noise = n.as<bool>(); }},
        {"gyro_noise_density", [&](const YAML::Node& n) { c.noise.gyro_noise_density = n.as<double>(); }},
        {"accel_noise_density", [&](const YAML::Node& n) { c.noise.accel_noise_density = n.as<double>(); }},
        {"gyro_random_walk", [&](const YAML::Node& n) { c.noise.gyro_random_walk = n.as<double>(); }},
        {"accel_random_walk", [&](const YAML::Node& n) { c.noise.accel_random_walk = n.as<double>(); }},
        {"gyro_bias", [&](const YAML::Node& n) { c.gyro_bias = read_vec3(n); }},
        {"accel_bias", [&](const YAML::Node& n) { c.accel_bias = read_vec3(n); }},
        {"pixel_noise", [&](const YAML::Node& n) { c.pixel_noise = n.as<double>(); }},
        {"stereo", [&](const YAML::Node& n) { c.stereo = n.as<bool>(); }},
        {"baseline", [&](const YAML::Node& n) { c.baseline = n.as<double>(); }},
        {"focal", [&](const YAML::Node& n) { c.focal = n.as<double>(); }},
        {"width", [&](const YAML::Node& n) { c.width = n.as<int>(); }},
        {"height", [&](const YAML::Node& n) { c.height = n.as<int>(); }},
        {"dot_radius", [&](const YAML::Node& n) { c.dot_radius = n.as<double>(); }},
        {"seed", [&](const YAML::Node& n) { c.seed = n.as<std::uint64_t>(); }},
    };
    for (const auto& kv : root) {
      const std::string key = kv.first.as<std::string>();
      auto it = setters.find(key);
      if (it == setters.end()) fail(ErrorCode::kConfig, file.string() + ": unknown scenario key '" + key + "'");
      it->second(kv.second);
    }
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::kParse, file.string() + ": " + e.what());
  }
  return c;
}

TrajectoryPoint SyntheticScenario::trajectory(double t) const {
  const ScenarioConfig& c = config_;
  TrajectoryPoint p;
  if (c.trajectory == "static") return p;
  if (c.trajectory == "rotate") {
    p.rotation = rot_z(c.angular_rate * t);
    p.angular_velocity = Vec3(0.0, 0.0, c.angular_rate);
    return p;
  }
  if (c.trajectory == "circle") {
    const double r = c.circle_radius, w = c.angular_rate;
    const double s = std::sin(w * t), co = std::cos(w * t);
    p.position = Vec3(r * s, r * (1.0 - co), 0.0);
    p.velocity = Vec3(r * w * co, r * w * s, 0.0);
    p.acceleration = Vec3(-r * w * w * s, r * w * w * co, 0.0);
    p.rotation = rot_z(w * t);
    p.angular_velocity = Vec3(0.0, 0.0, w);
    return p;
  }
  // wave
  const double tau = t - c.static_prefix_s;
  for (int k = 0; k < 3; ++k) {
    const Profile f = smooth_wave(c.wave_amplitude(k), c.wave_frequency(k), tau);
    p.position(k) = f.value;
    p.velocity(k) = f.rate;
    p.acceleration(k) = f.accel;
  }
  const Profile roll = smooth_wave(c.attitude_amplitude(0), c.attitude_frequency(0), tau);
  const Profile pitch = smooth_wave(c.attitude_amplitude(1), c.attitude_frequency(1), tau);
  const Profile yaw = smooth_wave(c.attitude_amplitude(2), c.attitude_frequency(2), tau);
  p.rotation = rot_z(yaw.value) * rot_y(pitch.value) * rot_x(roll.value);
  const double sr = std::sin(roll.value), cr = std::cos(roll.value);
  const double sp = std::sin(pitch.value), cp = std::cos(pitch.value);
  p.angular_velocity = Vec3(roll.rate - yaw.rate * sp,                 //
                            pitch.rate * cr + yaw.rate * sr * cp,      //
                            -pitch.rate * sr + yaw.rate * cr * cp);
  return p;
}

SyntheticScenario::SyntheticScenario(ScenarioConfig config) : config_(std::move(config)) {
  const ScenarioConfig& c = config_;
  static const std::set<std::string> kTrajectories = {"static", "rotate", "circle", "wave"};
  if (!kTrajectories.count(c.trajectory)) fail(ErrorCode::kConfig, "unknown trajectory '" + c.trajectory + "'");
  if (!(c.duration_s > 0.0) || !(c.imu_rate_hz > 0.0) || !(c.camera_rate_hz > 0.0))
    fail(ErrorCode::kConfig, "scenario duration and rates must be positive");
  if (c.landmark_count < 0) fail(ErrorCode::kConfig, "landmark_count must be non-negative");
  if (c.landmark_placement != "frustum" && c.landmark_placement != "box")
    fail(ErrorCode::kConfig, "landmark_placement must be 'frustum' or 'box'");

  calib_ = synthetic_calibration(c.focal, c.width, c.height, c.baseline);
  validate(calib_.left, c.stereo);

  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Vec3 gravity_world(0.0, 0.0, -c.gravity);
  const std::int64_t imu_dt = period_ns(c.imu_rate_hz);
  const std::int64_t end_ns = static_cast<std::int64_t>(std::llround(c.duration_s * 1e9));
  const double dt = static_cast<double>(imu_dt) * 1e-9;
  const double gyro_sigma = c.noise.gyro_noise_density / std::sqrt(dt);
  const double accel_sigma = c.noise.accel_noise_density / std::sqrt(dt);

  std::vector<GroundTruthSample> gt;
  for (std::int64_t t = 0; t <= end_ns; t += imu_dt) {
    const TrajectoryPoint p = trajectory(static_cast<double>(t) * 1e-9);
    ImuSample s;
    s.timestamp_ns = t;
    s.angular_velocity = p.angular_velocity + c.gyro_bias;
    s.linear_acceleration = p.rotation.transpose() * (p.acceleration - gravity_world) + c.accel_bias;
    if (c.add_imu_noise) {
      for (int k = 0; k < 3; ++k) s.angular_velocity(k) += gyro_sigma * normal(rng);
      for (int k = 0; k < 3; ++k) s.linear_acceleration(k) += accel_sigma * normal(rng);
    }
    imu_.push_back(s);
    gt.push_back({t, p.position, p.rotation, p.velocity, c.gyro_bias, c.accel_bias});
  }
  ground_truth_ = GroundTruth(std::move(gt));

  const std::int64_t cam_dt = period_ns(c.camera_rate_hz);
  for (std::int64_t t = 0; t <= end_ns; t += cam_dt) frame_times_.push_back(t);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < c.landmark_count; ++k) {
    if (c.landmark_placement == "box") {
      Vec3 p;
      for (int a = 0; a < 3; ++a) p(a) = c.box_min(a) + unit(rng) * (c.box_max(a) - c.box_min(a));
      landmarks_.push_back(p);
      continue;
    }
    const std::size_t frame = static_cast<std::size_t>(unit(rng) * static_cast<double>(frame_times_.size() - 1));
    const Pose world_T_cam = camera_pose(frame, false);
    const double margin = 30.0;
    const double u = margin + unit(rng) * (c.width - 1 - 2 * margin);
    const double v = margin + unit(rng) * (c.height - 1 - 2 * margin);
    const double depth = c.min_depth + unit(rng) * (c.max_depth - c.min_depth);
    const Vec3 ray((u - calib_.left.cx) / calib_.left.fx, (v - calib_.left.cy) / calib_.left.fy, 1.0);
    landmarks_.push_back(world_T_cam * (depth * ray));
  }

  bool any_visible = false;
  for (std::size_t i = 0; i < frame_times_.size() && !any_visible; ++i) {
    const Pose cam_T_world = camera_pose(i, false).inverse();
    for (const Vec3& lm : landmarks_) {
      const Vec3 pc = cam_T_world * lm;
      if (pc.z() > kMinDepth && in_image(project(calib_.left, pc), calib_.left, 0.0)) {
        any_visible = true;
        break;
      }
    }
  }
  if (!any_visible) fail(ErrorCode::kDegenerateScenario, "no landmark is in front of the camera at any frame");
}

Pose SyntheticScenario::camera_pose(std::size_t frame_index, bool right) const {
  const TrajectoryPoint p = trajectory(static_cast<double>(frame_times_.at(frame_index)) * 1e-9);
  const Pose world_T_body{p.rotation, p.position};
  return world_T_body * (right ? calib_.right.body_T_cam : calib_.left.body_T_cam);
}

std::vector<SyntheticObservation> SyntheticScenario::observations(std::size_t index) const {
  std::seed_seq seq{static_cast<std::uint64_t>(config_.seed), static_cast<std::uint64_t>(index),
                    static_cast<std::uint64_t>(0x0b5e7)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Pose left_T_world = camera_pose(index, false).inverse();
  const Pose right_T_world = camera_pose(index, true).inverse();

  std::vector<SyntheticObservation> out;
  for (std::size_t k = 0; k < landmarks_.size(); ++k) {
    const Vec3 pl = left_T_world * landmarks_[k];
    if (pl.z() <= kMinDepth) continue;
    Vec2 uv = project(calib_.left, pl);
    if (!in_image(uv, calib_.left, 1.0)) continue;
    SyntheticObservation obs;
    obs.landmark = static_cast<std::uint32_t>(k);
    obs.left = uv + config_.pixel_noise * Vec2(normal(rng), normal(rng));
    if (config_.stereo) {
      const Vec3 pr = right_T_world * landmarks_[k];
      if (pr.z() > kMinDepth) {
        const Vec2 uvr = project(calib_.right, pr);
        // rectified rig: the right observation shares the left row noise
        if (in_image(uvr, calib_.right, 1.0))
          obs.right = Vec2(uvr.x() + config_.pixel_noise * normal(rng), obs.left.y() + (uvr.y() - uv.y()));
      }
    }
    out.push_back(obs);
  }
  return out;
}

Frame SyntheticScenario::render(const Pose& world_T_cam, const CameraCalib& calib) const {
  constexpr int kBackground = 20, kForeground = 230;
  Frame img(calib.width, calib.height, kBackground);
  const Pose cam_T_world = world_T_cam.inverse();
  const double r = config_.dot_radius;
  for (const Vec3& lm : landmarks_) {
    const Vec3 pc = cam_T_world * lm;
    if (pc.z() <= kMinDepth) continue;
    const Vec2 uv = project(calib, pc);
    const int x0 = static_cast<int>(std::floor(uv.x() - r - 1.0)), x1 = static_cast<int>(std::ceil(uv.x() + r + 1.0));
    const int y0 = static_cast<int>(std::floor(uv.y() - r - 1.0)), y1 = static_cast<int>(std::ceil(uv.y() + r + 1.0));
    for (int y = std::max(0, y0); y <= std::min(calib.height - 1, y1); ++y) {
      for (int x = std::max(0, x0); x <= std::min(calib.width - 1, x1); ++x) {
        const double d = std::hypot(x - uv.x(), y - uv.y());
        const double coverage = std::clamp(r + 0.5 - d, 0.0, 1.0);
        if (coverage <= 0.0) continue;
        const int v = static_cast<int>(std::lround(kBackground + coverage * (kForeground - kBackground)));
        img.at(x, y) = static_cast<std::uint8_t>(std::max<int>(img.at(x, y), v));
      }
    }
  }
  return img;
}

FrameEvent SyntheticScenario::frame(std::size_t index, bool with_right) const {
  FrameEvent ev;
  ev.timestamp_ns = frame_times_.at(index);
  ev.left = render(camera_pose(index, false), calib_.left);
  if (with_right && config_.stereo) ev.right = render(camera_pose(index, true), calib_.right);
  return ev;
}

}  // namespace kfvio

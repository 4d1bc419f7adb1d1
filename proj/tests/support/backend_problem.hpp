#pragma once

// Small exactly-consistent smoother problems: keyframe states are produced by
// the same Euler recursion the preintegrator uses, so IMU factors vanish at
// the true states, and observations are exact projections of the landmarks.

#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "kfvio/backend/factors.hpp"
#include "kfvio/ife/preintegration.hpp"

namespace kfvio::testing {

struct BackendProblem {
  StereoCamera camera;
  ImuNoise noise;
  Vec3 gravity{0.0, 0.0, -9.81};
  std::vector<std::int64_t> timestamps;
  std::vector<KFState> states;
  std::vector<PreintegratedDelta> deltas;  // deltas[k] links k-1 -> k (deltas[0] unused)
  std::vector<Vec3> landmarks;
  /// observations[k] = (landmark id, (uL, uR, v)) seen at keyframe k
  std::vector<std::vector<std::pair<std::uint32_t, Vec3>>> observations;
};

inline StereoCamera test_camera() {
  StereoCamera cam;
  cam.fx = cam.fy = 458.0;
  cam.cx = 376.0;
  cam.cy = 240.0;
  cam.baseline = 0.11;
  Mat3 body_R_cam;
  body_R_cam << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  cam.body_T_cam = {body_R_cam, Vec3(0.02, 0.055, -0.01)};
  return cam;
}

inline bool visible(const StereoCamera& cam, const KFState& x, const Vec3& lm) {
  const Vec3 p = cam.body_T_cam.inverse() * (x.rotation.transpose() * (lm - x.position));
  if (p.z() < 0.5) return false;
  const Vec3 uvv = cam.predict(p);
  return uvv.x() > 5 && uvv.x() < 747 && uvv.y() > 5 && uvv.z() > 5 && uvv.z() < 475;
}

inline BackendProblem make_backend_problem(int keyframes, int landmark_count, int max_age, std::uint64_t seed,
                                           bool stereo = true) {
  BackendProblem P;
  P.camera = test_camera();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double imu_dt = 0.005;
  const int samples_per_kf = 20;
  KFState x;
  x.velocity = Vec3(0.4, 0.1, 0.0);
  x.gyro_bias = Vec3(0.001, -0.002, 0.0005);
  x.accel_bias = Vec3(0.01, 0.02, -0.01);
  P.states.push_back(x);
  P.timestamps.push_back(0);
  P.deltas.emplace_back();
  std::int64_t t_ns = 0;
  for (int k = 1; k < keyframes; ++k) {
    Preintegrator pre(P.noise, x.gyro_bias, x.accel_bias);
    for (int s = 0; s < samples_per_kf; ++s) {
      const double t = static_cast<double>(t_ns) * 1e-9;
      ImuSample sample;
      sample.timestamp_ns = t_ns;
      sample.angular_velocity = Vec3(0.05 * std::sin(t), -0.04, 0.25) + x.gyro_bias;
      sample.linear_acceleration = Vec3(0.3 * std::cos(1.3 * t), 0.2 * std::sin(t), 9.81 + 0.1 * std::sin(2 * t)) +
                                   x.accel_bias;
      pre.integrate(sample, imu_dt);
      t_ns += static_cast<std::int64_t>(imu_dt * 1e9);
    }
    PreintegratedDelta d = pre.finalize(k - 1, k);
    const double dt = d.duration_s;
    KFState next = x;
    next.rotation = orthonormalize(x.rotation * d.delta_rotation);
    next.velocity = x.velocity + P.gravity * dt + x.rotation * d.delta_velocity;
    next.position = x.position + x.velocity * dt + 0.5 * P.gravity * dt * dt + x.rotation * d.delta_position;
    x = next;
    P.states.push_back(x);
    P.timestamps.push_back(t_ns);
    P.deltas.push_back(d);
  }

  P.observations.resize(static_cast<std::size_t>(keyframes));
  for (int id = 0; id < landmark_count; ++id) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const int len = 2 + static_cast<int>(unit(rng) * (max_age - 1));
      const int start = static_cast<int>(unit(rng) * (keyframes - std::min(len, keyframes) + 1));
      const int stop = std::min(keyframes, start + len);
      const KFState& anchor = P.states[(start + stop - 1) / 2];
      const double u = 60 + unit(rng) * 632, v = 60 + unit(rng) * 360, depth = 2.0 + unit(rng) * 4.0;
      const Vec3 ray((u - P.camera.cx) / P.camera.fx, (v - P.camera.cy) / P.camera.fy, 1.0);
      const Vec3 lm = anchor.rotation * (P.camera.body_T_cam * (depth * ray)) + anchor.position;
      bool ok = true;
      for (int k = start; k < stop && ok; ++k) ok = visible(P.camera, P.states[k], lm);
      if (!ok) continue;
      P.landmarks.push_back(lm);
      const auto lid = static_cast<std::uint32_t>(P.landmarks.size() - 1);
      for (int k = start; k < stop; ++k) {
        const Vec3 p = P.camera.body_T_cam.inverse() * (P.states[k].rotation.transpose() * (lm - P.states[k].position));
        Vec3 c = P.camera.predict(p);
        if (!stereo) c.y() = std::numeric_limits<double>::quiet_NaN();
        P.observations[k].emplace_back(lid, c);
      }
      break;
    }
  }
  return P;
}

}  // namespace kfvio::testing

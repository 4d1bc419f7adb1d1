#include "kfvio/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "kfvio/core/error.hpp"

namespace kfvio {

bool select_keyframe(const KeyframePolicy& policy, std::size_t frame_index, double translation) {
  if (frame_index == 0) return true;
  if (policy.kind == KeyframePolicy::Kind::kRate) return frame_index % static_cast<std::size_t>(policy.rate) == 0;
  return translation >= policy.distance;
}

Rotation gravity_aligned_rotation(const Vec3& f) {
  if (f.norm() < 1e-6) return Rotation::Identity();
  // At rest the accelerometer reads R^T (0, 0, g); find R with zero yaw.
  const Vec3 up = f.normalized();
  const Rotation R = Eigen::Quaterniond::FromTwoVectors(up, Vec3::UnitZ()).toRotationMatrix();
  const double yaw = std::atan2(R(1, 0), R(0, 0));
  return orthonormalize(Eigen::AngleAxisd(-yaw, Vec3::UnitZ()).toRotationMatrix() * R);
}

KFState predict_state(const KFState& x, const PreintegratedDelta& d, const Vec3& g) {
  const double dt = d.duration_s;
  KFState out = x;
  out.rotation = orthonormalize(x.rotation * d.corrected_rotation(x.gyro_bias));
  out.velocity = x.velocity + g * dt + x.rotation * d.corrected_velocity(x.gyro_bias, x.accel_bias);
  out.position = x.position + x.velocity * dt + 0.5 * g * dt * dt +
                 x.rotation * d.corrected_position(x.gyro_bias, x.accel_bias);
  return out;
}

namespace {

StereoCamera backend_camera(const RectifiedCamera& rc) {
  StereoCamera cam;
  cam.fx = rc.fx;
  cam.fy = rc.fy;
  cam.cx = rc.cx;
  cam.cy = rc.cy;
  cam.baseline = rc.baseline;
  cam.body_T_cam = rc.body_T_cam;
  return cam;
}

PipelineConfig checked(PipelineConfig c) {
  c.sync();
  c.validate();
  return c;
}

}  // namespace

VioPipeline::VioPipeline(PipelineConfig config, const StereoCalib& calib, const ImuNoise& noise,
                         const SyntheticScenario* oracle)
    : config_(checked(std::move(config))),
      oracle_(oracle),
      rectifier_(calib, config_.stereo),
      smoother_(config_.backend, backend_camera(rectifier_.camera()), noise),
      noise_(noise),
      preintegrator_(noise) {
  if (config_.frontend == FrontendKind::kOracle && oracle_ == nullptr)
    fail(ErrorCode::kConfig, "oracle frontend needs a synthetic scenario");
  if (config_.frontend == FrontendKind::kImage)
    frontend_ = std::make_unique<VisionFrontend>(config_.vfe, calib, config_.stereo);
}

void VioPipeline::bootstrap(std::span<const ImuSample> imu_prefix) {
  if (imu_prefix.empty()) return;
  Vec3 mean = Vec3::Zero();
  for (const ImuSample& s : imu_prefix) mean += s.linear_acceleration;
  initial_rotation_ = gravity_aligned_rotation(mean / static_cast<double>(imu_prefix.size()));
}

const VfeCounters& VioPipeline::vfe_counters() const { return frontend_ ? frontend_->counters() : oracle_counters_; }

std::vector<std::pair<std::uint32_t, Vec3>> VioPipeline::oracle_observations(std::size_t frame_index) {
  const auto raw = oracle_->observations(frame_index);
  // already-tracked landmarks first, then new ones in landmark order
  std::vector<const SyntheticObservation*> order;
  for (const auto& o : raw)
    if (oracle_tracks_.count(o.landmark)) order.push_back(&o);
  for (const auto& o : raw)
    if (!oracle_tracks_.count(o.landmark)) order.push_back(&o);
  if (order.size() > static_cast<std::size_t>(config_.vfe.max_features))
    order.resize(static_cast<std::size_t>(config_.vfe.max_features));

  std::set<std::uint32_t> seen;
  std::vector<std::pair<std::uint32_t, Vec3>> out;
  for (const SyntheticObservation* o : order) {
    seen.insert(o->landmark);
    auto it = oracle_tracks_.find(o->landmark);
    if (it == oracle_tracks_.end()) it = oracle_tracks_.emplace(o->landmark, OracleTrack{next_oracle_id_++, 0}).first;
    Vec3 coords(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), 0.0);
    try {
      const Vec2 l = rectifier_.rectify_point(o->left, false);
      coords.x() = l.x();
      coords.z() = l.y();
      if (config_.stereo && o->right) coords.y() = rectifier_.rectify_point(*o->right, true).x();
    } catch (const Error&) {
      continue;
    }
    out.emplace_back(it->second.id, coords);
    if (++it->second.age >= config_.backend.feature_age) oracle_tracks_.erase(it);
  }
  // a landmark that drops out of view ends its track
  for (auto it = oracle_tracks_.begin(); it != oracle_tracks_.end();)
    it = seen.count(it->first) ? std::next(it) : oracle_tracks_.erase(it);
  return out;
}

std::vector<std::pair<std::uint32_t, Vec3>> VioPipeline::image_observations(const FrameEvent& ev,
                                                                            const Mat3& body_R_delta) {
  const Frame* right = config_.stereo && ev.right ? &*ev.right : nullptr;
  if (config_.stereo && right == nullptr) fail(ErrorCode::kInvalidArgument, "stereo mode needs right frames");
  std::vector<std::pair<std::uint32_t, Vec3>> out;
  for (const KeyframeObservation& o : frontend_->process_keyframe(ev.left, right, body_R_delta))
    out.emplace_back(o.id, o.coords);
  return out;
}

void VioPipeline::absorb_estimates() {
  for (const HorizonKeyframe& kf : smoother_.horizon()) estimates_[kf.id] = {kf.timestamp_ns, kf.state};
  for (const auto& [id, p] : smoother_.landmarks()) map_[id] = p;
}

std::optional<KFState> VioPipeline::process_frame(const FrameEvent& ev, std::span<const ImuSample> imu,
                                                  std::size_t frame_index) {
  if (last_frame_ns_ && ev.timestamp_ns <= *last_frame_ns_)
    fail(ErrorCode::kStream, "frame timestamp " + std::to_string(ev.timestamp_ns) + " does not increase");
  for (const ImuSample& s : imu) {
    if (!imu_.empty() && s.timestamp_ns <= imu_.back().timestamp_ns)
      fail(ErrorCode::kStream, "IMU timestamp " + std::to_string(s.timestamp_ns) + " does not increase");
    imu_.push_back(s);
    ++imu_samples_;
  }

  FrameRecord rec;
  rec.timestamp_ns = ev.timestamp_ns;

  if (!last_frame_ns_) {
    // bootstrap keyframe at the origin
    KFState x0;
    x0.rotation = initial_rotation_.value_or(Rotation::Identity());
    const auto obs = frontend_ ? image_observations(ev, Mat3::Identity()) : oracle_observations(frame_index);
    const std::int64_t id = next_kf_id_++;
    smoother_.add_keyframe(id, ev.timestamp_ns, x0, std::nullopt, obs);
    const StepReport step = smoother_.step();
    absorb_estimates();
    preintegrator_.reset(x0.gyro_bias, x0.accel_bias);
    last_frame_ns_ = ev.timestamp_ns;
    rec.keyframe = true;
    rec.features = obs.size();
    frames_.push_back(rec);
    keyframes_.push_back({id, ev.timestamp_ns, frame_index, obs.size(), smoother_.latest().state, step});
    ++frame_count_;
    return smoother_.latest().state;
  }

  preintegrator_.integrate_range(imu_, *last_frame_ns_, ev.timestamp_ns);
  last_frame_ns_ = ev.timestamp_ns;
  // keep only what the next zero-order hold can still need
  if (imu_.size() > 1) {
    auto keep = std::upper_bound(imu_.begin(), imu_.end(), ev.timestamp_ns,
                                 [](std::int64_t t, const ImuSample& s) { return t < s.timestamp_ns; });
    if (keep != imu_.begin()) --keep;
    imu_.erase(imu_.begin(), keep);
  }

  const KFState& latest = smoother_.latest().state;
  double travel = 0.0;
  if (config_.keyframes.kind == KeyframePolicy::Kind::kDistance && !preintegrator_.empty())
    travel = (predict_state(latest, preintegrator_.current(), config_.backend.gravity).position - latest.position).norm();
  const std::size_t index = frame_count_++;
  const bool is_kf = !preintegrator_.empty() && select_keyframe(config_.keyframes, index, travel);

  if (!is_kf) {
    if (frontend_) frontend_->process_frame(ev.left);
    rec.features = frontend_ ? frontend_->tracking().size() : 0;
    frames_.push_back(rec);
    return std::nullopt;
  }

  const std::int64_t id = next_kf_id_++;
  const PreintegratedDelta delta = preintegrator_.finalize(smoother_.latest().id, id);
  const KFState predicted = predict_state(latest, delta, config_.backend.gravity);
  const auto obs =
      frontend_ ? image_observations(ev, delta.corrected_rotation(latest.gyro_bias)) : oracle_observations(frame_index);
  smoother_.add_keyframe(id, ev.timestamp_ns, predicted, delta, obs);
  StepReport step;
  for (int it = 0; it < config_.gn_iterations; ++it) step = smoother_.step();
  const auto evicted = smoother_.take_evicted();
  if (frontend_) {
    frontend_->drop(evicted);
  } else {
    const std::set<std::uint32_t> gone(evicted.begin(), evicted.end());
    std::erase_if(oracle_tracks_, [&](const auto& kv) { return gone.count(kv.second.id) > 0; });
  }
  absorb_estimates();
  const KFState& now = smoother_.latest().state;
  preintegrator_.reset(now.gyro_bias, now.accel_bias);

  rec.keyframe = true;
  rec.features = frontend_ ? frontend_->tracking().size() : obs.size();
  frames_.push_back(rec);
  keyframes_.push_back({id, ev.timestamp_ns, frame_index, obs.size(), now, step});
  return now;
}

std::vector<TrajectorySample> VioPipeline::trajectory() const {
  std::vector<TrajectorySample> out;
  out.reserve(estimates_.size());
  for (const auto& [id, s] : estimates_) out.push_back(s);
  return out;
}

}  // namespace kfvio

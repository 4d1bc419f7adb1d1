#include "kfvio/backend/smoother.hpp"

#include <glog/logging.h>

#include <algorithm>
#include <set>
#include <string>

#include "kfvio/core/error.hpp"

namespace kfvio {

namespace {

constexpr int kB = state_index::kDim;

std::int64_t imu_linearize_macs() { return 2 * 15 * 15 * 30 + 30 * 30 * 15; }

std::int64_t vision_linearize_macs(std::int64_t rows, std::int64_t k) {
  const std::int64_t cols = 6 * k + 3;
  return rows * cols * cols + 36 * k * k * 3;
}

}  // namespace

/// Symmetric accumulation target: add(r, c, M) adds M at (r, c) and M^T at
/// (c, r) unless the two coincide.
struct Smoother::Sink {
  virtual ~Sink() = default;
  virtual void add(int row, int col, const Eigen::MatrixXd& m) = 0;
  virtual void add_rhs(int row, const Eigen::VectorXd& v) = 0;
};

Smoother::Smoother(BackendConfig config, StereoCamera camera, ImuNoise noise)
    : config_(std::move(config)),
      camera_(camera),
      noise_(noise),
      tracks_(config_.max_observations, config_.feature_age, config_.max_observations) {
  if (config_.horizon < 2 || config_.horizon > 20)
    fail(ErrorCode::kConfig, "backend: horizon must be in [2, 20]");
  if (config_.feature_age < 1 || config_.feature_age > 10)
    fail(ErrorCode::kConfig, "backend: feature age must be in [1, 10]");
  if (config_.feature_age > config_.horizon) fail(ErrorCode::kConfig, "backend: feature age exceeds horizon");
  if (!(config_.vision.pixel_sigma > 0.0)) fail(ErrorCode::kConfig, "backend: pixel sigma must be positive");
}

int Smoother::slot_of(std::int64_t kf) const {
  for (std::size_t i = 0; i < window_.size(); ++i)
    if (window_[i].id == kf) return static_cast<int>(i);
  return -1;
}

const KFState& Smoother::state(std::int64_t id) const {
  const int s = slot_of(id);
  if (s < 0) fail(ErrorCode::kNotFound, "backend: keyframe " + std::to_string(id) + " not in horizon");
  return window_[s].state;
}

void Smoother::set_state(std::int64_t id, const KFState& x) {
  const int s = slot_of(id);
  if (s < 0) fail(ErrorCode::kNotFound, "backend: keyframe " + std::to_string(id) + " not in horizon");
  window_[s].state = x;
}

const HorizonKeyframe& Smoother::latest() const {
  if (window_.empty()) fail(ErrorCode::kInsufficientData, "backend: empty horizon");
  return window_.back();
}

std::shared_ptr<const HessianPattern> Smoother::pattern_for(int size) {
  auto it = patterns_.find(size);
  if (it != patterns_.end()) return it->second;
  auto p = std::make_shared<const HessianPattern>(size, std::min(config_.feature_age, size));
  patterns_[size] = p;
  return p;
}

void Smoother::add_keyframe(std::int64_t id, std::int64_t timestamp_ns, const KFState& initial,
                            std::optional<PreintegratedDelta> imu,
                            const std::vector<std::pair<std::uint32_t, Vec3>>& observations) {
  if (!window_.empty()) {
    if (!imu) fail(ErrorCode::kInvalidArgument, "backend: keyframe without preintegrated IMU delta");
    if (id <= window_.back().id || timestamp_ns <= window_.back().timestamp_ns)
      fail(ErrorCode::kStream, "backend: keyframe ids and timestamps must increase");
  }
  if (static_cast<int>(window_.size()) == config_.horizon) marginalize_oldest();

  if (window_.empty()) {
    // first keyframe: anchor the gauge
    PriorFactor p;
    Vec15 sigma;
    sigma << Vec3::Constant(config_.prior_rotation_sigma), Vec3::Constant(config_.prior_position_sigma),
        Vec3::Constant(config_.prior_velocity_sigma), Vec3::Constant(config_.prior_gyro_bias_sigma),
        Vec3::Constant(config_.prior_accel_bias_sigma);
    for (int c = 0; c < kB; ++c) p.variables.emplace_back(id, c);
    p.hessian = sigma.cwiseInverse().cwiseAbs2().asDiagonal();
    p.rhs = Eigen::VectorXd::Zero(kB);
    p.linearization_points.emplace_back(id, initial);
    prior_ = std::move(p);
    imu.reset();
  }
  window_.push_back({id, timestamp_ns, initial, std::move(imu)});

  for (const auto& [landmark, coords] : observations) {
    try {
      tracks_.insert(landmark, {id, coords});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kCapacity) throw;
      LOG(WARNING) << "backend: dropped observation of landmark " << landmark << ": " << e.what();
    }
  }
}

double Smoother::linearize(Sink& sink, bool oldest_only, StepReport* report) const {
  double cost = 0.0;
  const int W = static_cast<int>(window_.size());
  const int age = std::min(config_.feature_age, W);

  // IMU factors
  for (int j = 1; j < W; ++j) {
    if (oldest_only && j != 1) break;
    const HorizonKeyframe& kj = window_[j];
    if (!kj.imu) continue;
    const ImuFactorLinearization lin =
        linearize_imu(*kj.imu, window_[j - 1].state, kj.state, config_.gravity, noise_);
    const Mat15 JiT_W = lin.jacobian_i.transpose() * lin.information;
    const Mat15 JjT_W = lin.jacobian_j.transpose() * lin.information;
    const int i = j - 1;
    sink.add(i * kB, i * kB, JiT_W * lin.jacobian_i);
    sink.add(j * kB, i * kB, JjT_W * lin.jacobian_i);
    sink.add(j * kB, j * kB, JjT_W * lin.jacobian_j);
    sink.add_rhs(i * kB, -JiT_W * lin.residual);
    sink.add_rhs(j * kB, -JjT_W * lin.residual);
    cost += 0.5 * lin.residual.dot(lin.information * lin.residual);
    if (report) {
      ++report->imu_factors;
      report->linearize_macs += imu_linearize_macs();
    }
  }

  // vision factors
  for (std::uint32_t landmark : tracks_.landmarks()) {
    const std::vector<TrackObservation> obs = tracks_.observations(landmark);
    std::vector<int> slots;
    std::vector<KFState> states;
    bool valid = true;
    for (const TrackObservation& o : obs) {
      const int s = slot_of(o.kf);
      if (s < 0) {
        valid = false;
        break;
      }
      slots.push_back(s);
      states.push_back(window_[s].state);
    }
    if (!valid || obs.size() < 2) continue;
    if (oldest_only && slots.front() != 0) continue;
    const auto [lo, hi] = std::minmax_element(slots.begin(), slots.end());
    if (*hi - *lo > age - 1) {
      if (report) ++report->skipped_tracks;
      continue;
    }
    const std::optional<VisionLinearization> lin = linearize_vision(obs, states, camera_, config_.vision);
    if (!lin) {
      if (report) ++report->skipped_tracks;
      continue;
    }
    const int k = static_cast<int>(obs.size());
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b <= a; ++b)
        sink.add(slots[a] * kB, slots[b] * kB, lin->hessian.block(6 * a, 6 * b, 6, 6));
      sink.add_rhs(slots[a] * kB, lin->rhs.segment(6 * a, 6));
    }
    cost += lin->cost;
    if (report) {
      ++report->vision_factors;
      report->linearize_macs += vision_linearize_macs(3 * k, k);
    }
  }

  // marginalization prior
  if (prior_) {
    std::vector<std::pair<std::int64_t, KFState>> current;
    for (const HorizonKeyframe& kf : window_) current.emplace_back(kf.id, kf.state);
    const Eigen::VectorXd d = prior_->offset(current);
    const Eigen::VectorXd eps = prior_->rhs - prior_->hessian * d;
    std::vector<int> global;
    for (const auto& [kf, comp] : prior_->variables) global.push_back(slot_of(kf) * kB + comp);
    Eigen::MatrixXd one(1, 1);
    Eigen::VectorXd one_v(1);
    for (std::size_t a = 0; a < global.size(); ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        one(0, 0) = prior_->hessian(a, b);
        sink.add(global[a], global[b], one);
      }
      one_v(0) = eps(a);
      sink.add_rhs(global[a], one_v);
    }
    cost += 0.5 * d.dot(prior_->hessian * d) - prior_->rhs.dot(d);
  }
  return cost;
}

StepReport Smoother::step() {
  if (window_.empty()) fail(ErrorCode::kInsufficientData, "backend: step on an empty horizon");
  const int W = static_cast<int>(window_.size());
  StructuredHessian h(pattern_for(W));

  struct StructuredSink final : Sink {
    StructuredHessian& h;
    explicit StructuredSink(StructuredHessian& target) : h(target) {}
    void add(int row, int col, const Eigen::MatrixXd& m) override { h.accumulate(row, col, m); }
    void add_rhs(int row, const Eigen::VectorXd& v) override { h.rhs().segment(row, v.size()) += v; }
  } sink(h);

  StepReport report;
  report.cost = linearize(sink, false, &report);
  h.add_diagonal(config_.damping);
  SparseCholesky chol;
  chol.factorize(h);
  const Eigen::VectorXd dx = chol.solve(h.rhs());
  report.solver = chol.stats();
  report.delta_norm = dx.norm();
  for (int s = 0; s < W; ++s) window_[s].state = retract(window_[s].state, dx.segment<kB>(s * kB));

  ++counters_.steps;
  counters_.imu_linearizations += report.imu_factors;
  counters_.vision_linearizations += report.vision_factors;
  counters_.linearize_macs += report.linearize_macs;
  counters_.factor_macs += report.solver.factor_macs;
  counters_.dense_factor_macs += report.solver.dense_factor_macs;
  counters_.solve_macs += report.solver.solve_macs;
  counters_.dense_solve_macs += report.solver.dense_solve_macs;
  return report;
}

void Smoother::marginalize_oldest() {
  const int W = static_cast<int>(window_.size());
  const int n = W * kB;
  struct DenseSinkImpl final : Sink {
    Eigen::MatrixXd h;
    Eigen::VectorXd eps;
    explicit DenseSinkImpl(int dim) : h(Eigen::MatrixXd::Zero(dim, dim)), eps(Eigen::VectorXd::Zero(dim)) {}
    void add(int row, int col, const Eigen::MatrixXd& m) override {
      h.block(row, col, m.rows(), m.cols()) += m;
      if (row != col) h.block(col, row, m.cols(), m.rows()) += m.transpose();
    }
    void add_rhs(int row, const Eigen::VectorXd& v) override { eps.segment(row, v.size()) += v; }
  } sink(n);
  StepReport report;
  linearize(sink, true, &report);

  // variables coupled to the oldest state, by factor structure
  std::set<int> kept;
  if (W >= 2 && window_[1].imu)
    for (int c = 0; c < kB; ++c) kept.insert(kB + c);
  for (std::uint32_t landmark : tracks_.landmarks()) {
    const std::vector<TrackObservation> obs = tracks_.observations(landmark);
    if (std::none_of(obs.begin(), obs.end(), [&](const auto& o) { return o.kf == window_[0].id; })) continue;
    for (const TrackObservation& o : obs) {
      const int s = slot_of(o.kf);
      if (s > 0)
        for (int c = 0; c < state_index::kPoseDim; ++c) kept.insert(s * kB + c);
    }
  }
  if (prior_)
    for (const auto& [kf, comp] : prior_->variables) {
      const int s = slot_of(kf);
      if (s > 0) kept.insert(s * kB + comp);
    }

  std::vector<int> marg(kB);
  for (int c = 0; c < kB; ++c) marg[c] = c;
  const std::vector<int> kept_v(kept.begin(), kept.end());
  const MarginalPrior mp = schur_marginalize(sink.h, sink.eps, marg, kept_v);

  PriorFactor p;
  std::set<int> slots;
  for (int g : kept_v) {
    p.variables.emplace_back(window_[g / kB].id, g % kB);
    slots.insert(g / kB);
  }
  for (int s : slots) p.linearization_points.emplace_back(window_[s].id, window_[s].state);
  p.hessian = mp.hessian;
  p.rhs = mp.rhs;
  prior_ = std::move(p);

  const std::int64_t k = static_cast<std::int64_t>(kept_v.size());
  counters_.marginalize_macs += report.linearize_macs + kB * kB * kB + k * kB * kB + k * k * kB;
  ++counters_.marginalizations;

  const std::vector<std::uint32_t> dropped = tracks_.evict_touching(window_[0].id);
  evicted_.insert(evicted_.end(), dropped.begin(), dropped.end());
  window_.pop_front();
  if (!window_.empty()) window_.front().imu.reset();
}

double Smoother::total_cost() const {
  struct NullSink final : Sink {
    void add(int, int, const Eigen::MatrixXd&) override {}
    void add_rhs(int, const Eigen::VectorXd&) override {}
  } sink;
  return linearize(sink, false, nullptr);
}

std::map<std::uint32_t, Vec3> Smoother::landmarks() const {
  std::map<std::uint32_t, Vec3> out;
  for (std::uint32_t landmark : tracks_.landmarks()) {
    const std::vector<TrackObservation> obs = tracks_.observations(landmark);
    std::vector<KFState> states;
    for (const TrackObservation& o : obs) {
      const int s = slot_of(o.kf);
      if (s < 0) break;
      states.push_back(window_[s].state);
    }
    if (states.size() != obs.size() || obs.size() < 2) continue;
    if (auto lm = triangulate_track(obs, states, camera_, config_.vision)) out[landmark] = *lm;
  }
  return out;
}

std::vector<std::uint32_t> Smoother::take_evicted() {
  std::vector<std::uint32_t> out;
  out.swap(evicted_);
  return out;
}

}  // namespace kfvio

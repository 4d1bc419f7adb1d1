#include "kfvio/pipeline/evaluation.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "kfvio/core/error.hpp"

namespace kfvio {

Pose align_points(const std::vector<Vec3>& from, const std::vector<Vec3>& to, Alignment kind) {
  if (from.size() != to.size() || from.empty()) fail(ErrorCode::kInvalidArgument, "align_points: size mismatch");
  const double n = static_cast<double>(from.size());
  Vec3 mf = Vec3::Zero(), mt = Vec3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    mf += from[i];
    mt += to[i];
  }
  mf /= n;
  mt /= n;
  Mat3 S = Mat3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) S += (to[i] - mt) * (from[i] - mf).transpose();
  Mat3 R = Mat3::Identity();
  if (kind == Alignment::kRigid) {
    Eigen::JacobiSVD<Mat3> svd(S, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 D = Mat3::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) D(2, 2) = -1;
    R = svd.matrixU() * D * svd.matrixV().transpose();
  } else {
    // maximise trace(Rz(a)^T S) over a
    const double a = std::atan2(S(1, 0) - S(0, 1), S(0, 0) + S(1, 1));
    R = Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix();
  }
  return {R, mt - R * mf};
}

TrajectoryError evaluate_trajectory(const std::vector<TrajectorySample>& estimate, const GroundTruth& gt) {
  if (estimate.size() < 2) fail(ErrorCode::kInsufficientData, "evaluate_trajectory: need at least two estimates");
  std::vector<Vec3> est, ref;
  std::int64_t t0 = 0, t1 = 0;
  for (const TrajectorySample& s : estimate) {
    if (!gt.covers(s.timestamp_ns)) continue;
    if (est.empty()) t0 = s.timestamp_ns;
    t1 = s.timestamp_ns;
    est.push_back(s.state.position);
    ref.push_back(gt.interpolate(s.timestamp_ns).position);
  }
  if (est.size() < 2) fail(ErrorCode::kOutOfRange, "evaluate_trajectory: estimate does not overlap ground truth");

  TrajectoryError out;
  out.matched = est.size();
  auto rmse = [&](Alignment kind) {
    const Pose T = align_points(est, ref, kind);
    double sq = 0;
    for (std::size_t i = 0; i < est.size(); ++i) sq += (T * est[i] - ref[i]).squaredNorm();
    return std::sqrt(sq / static_cast<double>(est.size()));
  };
  out.ate_rmse = rmse(Alignment::kRigid);
  out.ate_rmse_yaw = rmse(Alignment::kYaw);

  Vec3 prev = gt.interpolate(t0).position;
  for (const GroundTruthSample& g : gt.samples()) {
    if (g.timestamp_ns <= t0 || g.timestamp_ns >= t1) continue;
    out.path_length += (g.position - prev).norm();
    prev = g.position;
  }
  out.path_length += (gt.interpolate(t1).position - prev).norm();
  if (out.path_length > 0) {
    out.normalized = 100.0 * out.ate_rmse / out.path_length;
    out.normalized_yaw = 100.0 * out.ate_rmse_yaw / out.path_length;
  }
  return out;
}

}  // namespace kfvio

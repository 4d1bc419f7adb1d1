#include "kfvio/backend/factors.hpp"

#include <glog/logging.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "kfvio/core/error.hpp"

namespace kfvio {

namespace si = state_index;

// ---- IMU ------------------------------------------------------------------

namespace {

struct ImuTerms {
  Vec3 rot_err, vel_pred, pos_pred;  // vel_pred/pos_pred are the body-frame predicted deltas
  Vec3 dbg, dba;
  Rotation dR_corr;
  double dt;
};

ImuTerms imu_terms(const PreintegratedDelta& d, const KFState& xi, const KFState& xj, const Vec3& g) {
  if (!(d.duration_s > 0.0)) fail(ErrorCode::kInvalidArgument, "linearize_imu: zero-duration preintegration");
  ImuTerms t;
  t.dt = d.duration_s;
  t.dbg = xi.gyro_bias - d.gyro_bias;
  t.dba = xi.accel_bias - d.accel_bias;
  t.dR_corr = d.corrected_rotation(xi.gyro_bias);
  const Mat3 RiT = xi.rotation.transpose();
  t.rot_err = so3_log(orthonormalize(t.dR_corr.transpose() * RiT * xj.rotation));
  t.vel_pred = RiT * (xj.velocity - xi.velocity - g * t.dt);
  t.pos_pred = RiT * (xj.position - xi.position - xi.velocity * t.dt - 0.5 * g * t.dt * t.dt);
  return t;
}

}  // namespace

Vec15 imu_residual(const PreintegratedDelta& d, const KFState& xi, const KFState& xj, const Vec3& gravity) {
  const ImuTerms t = imu_terms(d, xi, xj, gravity);
  Vec15 r;
  r.segment<3>(0) = t.rot_err;
  r.segment<3>(3) = d.corrected_velocity(xi.gyro_bias, xi.accel_bias) - t.vel_pred;
  r.segment<3>(6) = d.corrected_position(xi.gyro_bias, xi.accel_bias) - t.pos_pred;
  r.segment<3>(9) = xj.gyro_bias - xi.gyro_bias;
  r.segment<3>(12) = xj.accel_bias - xi.accel_bias;
  return r;
}

ImuFactorLinearization linearize_imu(const PreintegratedDelta& d, const KFState& xi, const KFState& xj,
                                     const Vec3& gravity, const ImuNoise& noise) {
  const ImuTerms t = imu_terms(d, xi, xj, gravity);
  ImuFactorLinearization out;
  out.residual = imu_residual(d, xi, xj, gravity);

  const Mat3 RiT = xi.rotation.transpose();
  const Mat3 Jr_inv = so3_right_jacobian_inverse(t.rot_err);
  const Mat3 I3 = Mat3::Identity();
  Mat15& Ji = out.jacobian_i;
  Mat15& Jj = out.jacobian_j;

  // rotation rows
  Ji.block<3, 3>(0, si::kRot) = -Jr_inv * xj.rotation.transpose() * xi.rotation;
  Ji.block<3, 3>(0, si::kGyroBias) =
      -Jr_inv * so3_exp(t.rot_err).transpose() * so3_right_jacobian(d.dR_dbg * t.dbg) * d.dR_dbg;
  Jj.block<3, 3>(0, si::kRot) = Jr_inv;
  // velocity rows
  Ji.block<3, 3>(3, si::kRot) = -hat(t.vel_pred);
  Ji.block<3, 3>(3, si::kVel) = RiT;
  Ji.block<3, 3>(3, si::kGyroBias) = d.dv_dbg;
  Ji.block<3, 3>(3, si::kAccelBias) = d.dv_dba;
  Jj.block<3, 3>(3, si::kVel) = -RiT;
  // position rows
  Ji.block<3, 3>(6, si::kRot) = -hat(t.pos_pred);
  Ji.block<3, 3>(6, si::kPos) = RiT;
  Ji.block<3, 3>(6, si::kVel) = RiT * t.dt;
  Ji.block<3, 3>(6, si::kGyroBias) = d.dp_dbg;
  Ji.block<3, 3>(6, si::kAccelBias) = d.dp_dba;
  Jj.block<3, 3>(6, si::kPos) = -RiT;
  // bias random walk
  Ji.block<3, 3>(9, si::kGyroBias) = -I3;
  Jj.block<3, 3>(9, si::kGyroBias) = I3;
  Ji.block<3, 3>(12, si::kAccelBias) = -I3;
  Jj.block<3, 3>(12, si::kAccelBias) = I3;

  Mat9 cov = d.covariance;
  Eigen::SelfAdjointEigenSolver<Mat9> eig(cov);
  const double max_ev = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  if (eig.eigenvalues().minCoeff() <= 1e-12 * max_ev || max_ev == 0.0) {
    cov += (1e-12 + 1e-9 * max_ev) * Mat9::Identity();
    out.regularized = true;
    LOG(WARNING) << "linearize_imu: singular preintegration covariance, regularized";
  }
  out.information.block<9, 9>(0, 0) = cov.inverse();
  out.information.block<9, 9>(0, 0) = 0.5 * (out.information.block<9, 9>(0, 0) +
                                             out.information.block<9, 9>(0, 0).transpose()).eval();
  const double bg_var = std::max(noise.gyro_random_walk * noise.gyro_random_walk * t.dt, 1e-20);
  const double ba_var = std::max(noise.accel_random_walk * noise.accel_random_walk * t.dt, 1e-20);
  out.information.block<3, 3>(9, 9) = I3 / bg_var;
  out.information.block<3, 3>(12, 12) = I3 / ba_var;
  return out;
}

// ---- Vision ---------------------------------------------------------------

Vec3 StereoCamera::predict(const Vec3& p) const {
  if (!(p.z() > 0.0)) fail(ErrorCode::kBehindCamera, "StereoCamera: point behind camera");
  return {fx * p.x() / p.z() + cx, fx * (p.x() - baseline) / p.z() + cx, fy * p.y() / p.z() + cy};
}

namespace {

int rows_of(const TrackObservation& o) { return o.has_right() ? 3 : 2; }

/// Raw (unweighted, unwhitened) residual rows and Jacobians of one observation.
void observation_terms(const TrackObservation& o, const KFState& x, const Vec3& landmark, const StereoCamera& cam,
                       Eigen::MatrixXd& r, Eigen::MatrixXd& j_pose, Eigen::MatrixXd& j_lm) {
  const Pose cam_T_body = cam.body_T_cam.inverse();
  const Vec3 p_b = x.rotation.transpose() * (landmark - x.position);
  const Vec3 p = cam_T_body * p_b;
  const Vec3 pred = cam.predict(p);

  Eigen::Matrix<double, 3, 3> d_pred;  // rows (uL, uR, v) w.r.t. p_cam
  const double iz = 1.0 / p.z(), iz2 = iz * iz;
  d_pred << cam.fx * iz, 0.0, -cam.fx * p.x() * iz2,  //
      cam.fx * iz, 0.0, -cam.fx * (p.x() - cam.baseline) * iz2,  //
      0.0, cam.fy * iz, -cam.fy * p.y() * iz2;
  const Mat3& Rcb = cam_T_body.rotation;
  Eigen::Matrix<double, 3, 6> d_pose;
  d_pose.leftCols<3>() = Rcb * hat(p_b);
  d_pose.rightCols<3>() = -Rcb * x.rotation.transpose();
  const Mat3 d_lm = Rcb * x.rotation.transpose();

  const int n = rows_of(o);
  const int sel[3] = {0, 2, 1};  // mono keeps (uL, v)
  r.resize(n, 1);
  j_pose.resize(n, 6);
  j_lm.resize(n, 3);
  for (int k = 0; k < n; ++k) {
    const int row = o.has_right() ? k : sel[k];
    r(k) = pred(row) - o.coords(row);
    j_pose.row(k) = d_pred.row(row) * d_pose;
    j_lm.row(k) = d_pred.row(row) * d_lm;
  }
}

}  // namespace

VisionJacobians vision_jacobians(const std::vector<TrackObservation>& obs, const std::vector<KFState>& states,
                                 const Vec3& landmark, const StereoCamera& cam, const VisionParams& params) {
  if (obs.size() != states.size()) fail(ErrorCode::kInvalidArgument, "vision_jacobians: obs/state count mismatch");
  int rows = 0;
  for (const auto& o : obs) rows += rows_of(o);
  const int k = static_cast<int>(obs.size());
  VisionJacobians out;
  out.residual = Eigen::VectorXd::Zero(rows);
  out.jacobian_pose = Eigen::MatrixXd::Zero(rows, 6 * k);
  out.jacobian_landmark = Eigen::MatrixXd::Zero(rows, 3);
  Eigen::MatrixXd r, jp, jl;
  int row = 0;
  for (int i = 0; i < k; ++i) {
    observation_terms(obs[i], states[i], landmark, cam, r, jp, jl);
    const int n = static_cast<int>(r.rows());
    const double e = r.norm() / params.pixel_sigma;
    double w = 1.0, rho = e * e;
    if (e > params.huber_threshold) {
      w = params.huber_threshold / e;
      rho = 2.0 * params.huber_threshold * e - params.huber_threshold * params.huber_threshold;
    }
    const double s = std::sqrt(w) / params.pixel_sigma;
    out.residual.segment(row, n) = s * r;
    out.jacobian_pose.block(row, 6 * i, n, 6) = s * jp;
    out.jacobian_landmark.block(row, 0, n, 3) = s * jl;
    out.cost += 0.5 * rho;
    row += n;
  }
  return out;
}

std::optional<Vec3> triangulate_track(const std::vector<TrackObservation>& obs, const std::vector<KFState>& states,
                                      const StereoCamera& cam, const VisionParams& params) {
  if (obs.empty() || obs.size() != states.size()) return std::nullopt;
  auto world_T_cam = [&](std::size_t i) { return Pose{states[i].rotation, states[i].position} * cam.body_T_cam; };
  auto ray = [&](std::size_t i) {
    return Vec3((obs[i].coords.x() - cam.cx) / cam.fx, (obs[i].coords.z() - cam.cy) / cam.fy, 1.0);
  };

  std::optional<Vec3> init;
  for (std::size_t i = 0; i < obs.size() && !init; ++i) {
    if (!obs[i].has_right()) continue;
    const double disparity = obs[i].coords.x() - obs[i].coords.y();
    if (disparity > 1e-3) init = world_T_cam(i) * (cam.fx * cam.baseline / disparity * ray(i));
  }
  if (!init && obs.size() >= 2) {
    // midpoint of the first and last rays
    const Pose a = world_T_cam(0), b = world_T_cam(obs.size() - 1);
    const Vec3 da = a.rotation * ray(0), db = b.rotation * ray(obs.size() - 1);
    const Vec3 w0 = a.translation - b.translation;
    const double aa = da.dot(da), bb = db.dot(db), ab = da.dot(db);
    const double denom = aa * bb - ab * ab;
    if (denom > 1e-12 * aa * bb) {
      const double s = (ab * db.dot(w0) - bb * da.dot(w0)) / denom;
      const double t = (aa * db.dot(w0) - ab * da.dot(w0)) / denom;
      init = 0.5 * (a.translation + s * da + b.translation + t * db);
    }
  }
  if (!init) return std::nullopt;

  Vec3 lm = *init;
  VisionParams plain = params;
  plain.huber_threshold = std::numeric_limits<double>::infinity();
  try {
    for (int it = 0; it < params.triangulation_iterations; ++it) {
      const VisionJacobians j = vision_jacobians(obs, states, lm, cam, plain);
      const Mat3 H = j.jacobian_landmark.transpose() * j.jacobian_landmark;
      const Vec3 g = j.jacobian_landmark.transpose() * j.residual;
      const Vec3 step = -(H + 1e-12 * H.trace() * Mat3::Identity()).ldlt().solve(g);
      if (!step.allFinite()) break;
      lm += step;
      if (step.norm() < 1e-12 * std::max(1.0, lm.norm())) break;
    }
    const Pose cam_T_body = cam.body_T_cam.inverse();
    for (const KFState& x : states)
      if ((cam_T_body * (x.rotation.transpose() * (lm - x.position))).z() <= 0.0) return std::nullopt;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kBehindCamera) return std::nullopt;
    throw;
  }
  return lm;
}

VisionLinearization schur_eliminate_landmark(const VisionJacobians& jac) {
  VisionLinearization out;
  const Eigen::MatrixXd& Jx = jac.jacobian_pose;
  const Eigen::MatrixXd& Jl = jac.jacobian_landmark;
  Mat3 Hll = Jl.transpose() * Jl;
  Eigen::SelfAdjointEigenSolver<Mat3> eig(Hll);
  const double max_ev = std::max(eig.eigenvalues().maxCoeff(), 1e-300);
  if (eig.eigenvalues().minCoeff() < 1e-10 * max_ev) {
    Hll += 1e-8 * max_ev * Mat3::Identity();
    out.damped = true;
  }
  const Eigen::MatrixXd Hxl = Jx.transpose() * Jl;
  const Vec3 gl = Jl.transpose() * jac.residual;
  const Eigen::LDLT<Mat3> ldlt(Hll);
  const Eigen::MatrixXd Hll_inv_Hlx = ldlt.solve(Hxl.transpose());
  out.hessian = Jx.transpose() * Jx - Hxl * Hll_inv_Hlx;
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  out.rhs = -(Jx.transpose() * jac.residual - Hxl * ldlt.solve(gl));
  out.cost = jac.cost;
  return out;
}

std::optional<VisionLinearization> linearize_vision(const std::vector<TrackObservation>& obs,
                                                    const std::vector<KFState>& states, const StereoCamera& cam,
                                                    const VisionParams& params) {
  if (obs.size() < 2) return std::nullopt;
  const std::optional<Vec3> lm = triangulate_track(obs, states, cam, params);
  if (!lm) {
    VLOG(1) << "linearize_vision: landmark behind a camera, track skipped";
    return std::nullopt;
  }
  VisionLinearization out = schur_eliminate_landmark(vision_jacobians(obs, states, *lm, cam, params));
  out.landmark = *lm;
  return out;
}

// ---- Marginalization ------------------------------------------------------

MarginalPrior schur_marginalize(const Eigen::MatrixXd& h, const Eigen::VectorXd& eps,
                                const std::vector<int>& marginalized, const std::vector<int>& kept) {
  const int m = static_cast<int>(marginalized.size()), k = static_cast<int>(kept.size());
  auto pick = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = 0; b < cols.size(); ++b) out(a, b) = h(rows[a], cols[b]);
    return out;
  };
  for (int idx : marginalized)
    if (idx < 0 || idx >= h.rows()) fail(ErrorCode::kOutOfRange, "schur_marginalize: index out of range");
  for (int idx : kept)
    if (idx < 0 || idx >= h.rows()) fail(ErrorCode::kOutOfRange, "schur_marginalize: index out of range");

  const Eigen::MatrixXd Hmm = pick(marginalized, marginalized);
  const Eigen::MatrixXd Hkm = pick(kept, marginalized);
  Eigen::VectorXd em(m), ek(k);
  for (int a = 0; a < m; ++a) em(a) = eps(marginalized[a]);
  for (int a = 0; a < k; ++a) ek(a) = eps(kept[a]);

  MarginalPrior out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Hmm);
  Eigen::VectorXd ev = eig.eigenvalues();
  const double floor = ev.maxCoeff() > 0.0 ? 1e-12 * ev.maxCoeff() : 1e-12;
  for (int a = 0; a < m; ++a) {
    if (ev(a) < floor) {
      ev(a) = floor;
      out.damped = true;
    }
  }
  if (out.damped) LOG(WARNING) << "marginalize: singular marginal block, damped inverse used";
  const Eigen::MatrixXd Hmm_inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  out.hessian = pick(kept, kept) - Hkm * Hmm_inv * Hkm.transpose();
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  out.rhs = ek - Hkm * (Hmm_inv * em);
  return out;
}

const KFState& PriorFactor::linearization_point(std::int64_t kf) const {
  for (const auto& [id, x] : linearization_points)
    if (id == kf) return x;
  fail(ErrorCode::kNotFound, "PriorFactor: no linearization point for keyframe " + std::to_string(kf));
}

Eigen::VectorXd PriorFactor::offset(const std::vector<std::pair<std::int64_t, KFState>>& current) const {
  Eigen::VectorXd d(variables.size());
  std::int64_t cached_kf = -1;
  Vec15 diff = Vec15::Zero();
  for (std::size_t a = 0; a < variables.size(); ++a) {
    const auto [kf, comp] = variables[a];
    if (kf != cached_kf) {
      auto it = std::find_if(current.begin(), current.end(), [&](const auto& p) { return p.first == kf; });
      if (it == current.end()) fail(ErrorCode::kNotFound, "PriorFactor: keyframe left the horizon");
      diff = state_difference(linearization_point(kf), it->second);
      cached_kf = kf;
    }
    d(a) = diff(comp);
  }
  return d;
}

}  // namespace kfvio

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kfvio/backend/track_store.hpp"
#include "kfvio/dataset/types.hpp"
#include "kfvio/geometry/camera.hpp"
#include "kfvio/geometry/state.hpp"
#include "kfvio/ife/preintegration.hpp"

namespace kfvio {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// ---- IMU factor -----------------------------------------------------------

/// Residual rows: (r_R, r_v, r_p, r_bg, r_ba). r_R = Log(dR^T Ri^T Rj); the
/// velocity and position rows are measurement minus prediction, the bias rows
/// are b_j - b_i.
struct ImuFactorLinearization {
  Vec15 residual = Vec15::Zero();
  Mat15 jacobian_i = Mat15::Zero();
  Mat15 jacobian_j = Mat15::Zero();
  Mat15 information = Mat15::Zero();
  bool regularized = false;
};

/// Throws kInvalidArgument when the delta has zero duration.
Vec15 imu_residual(const PreintegratedDelta& delta, const KFState& xi, const KFState& xj, const Vec3& gravity);
ImuFactorLinearization linearize_imu(const PreintegratedDelta& delta, const KFState& xi, const KFState& xj,
                                     const Vec3& gravity, const ImuNoise& noise);

// ---- Vision factor --------------------------------------------------------

/// Rectified stereo camera rigidly attached to the body.
struct StereoCamera {
  double fx = 458.0, fy = 458.0, cx = 376.0, cy = 240.0;
  double baseline = 0.11;
  Pose body_T_cam;
  /// Predicted (u_left, u_right, v) of a point in the left camera frame.
  Vec3 predict(const Vec3& p_cam) const;
};

struct VisionParams {
  double pixel_sigma = 1.0;
  double huber_threshold = 1.345;  // on the whitened per-observation error
  int triangulation_iterations = 10;
};

/// Stacked whitened and robustly weighted residuals of one track, with
/// Jacobians with respect to the (theta, p) blocks of each observing state
/// and the landmark.
struct VisionJacobians {
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian_pose;      // rows x 6k
  Eigen::MatrixXd jacobian_landmark;  // rows x 3
  double cost = 0.0;                  // robust cost, 0.5 * sum rho
};

VisionJacobians vision_jacobians(const std::vector<TrackObservation>& obs, const std::vector<KFState>& states,
                                 const Vec3& landmark, const StereoCamera& cam, const VisionParams& params);

/// Linear (stereo depth or midpoint) initialization followed by Gauss-Newton
/// refinement with the states held fixed. Returns nullopt if the landmark ends
/// up behind any observing camera.
std::optional<Vec3> triangulate_track(const std::vector<TrackObservation>& obs, const std::vector<KFState>& states,
                                      const StereoCamera& cam, const VisionParams& params);

/// Track contribution after eliminating the landmark: H and eps over the
/// stacked (theta, p) of the observing states in observation order.
struct VisionLinearization {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd rhs;
  Vec3 landmark = Vec3::Zero();
  double cost = 0.0;
  bool damped = false;
};

VisionLinearization schur_eliminate_landmark(const VisionJacobians& jac);
std::optional<VisionLinearization> linearize_vision(const std::vector<TrackObservation>& obs,
                                                    const std::vector<KFState>& states, const StereoCamera& cam,
                                                    const VisionParams& params);

// ---- Marginalization ------------------------------------------------------

struct MarginalPrior {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd rhs;
  bool damped = false;
};

/// Schur complement of H dx = eps onto `kept`, eliminating `marginalized`.
/// A near-singular marginal block is inverted with eigenvalue clamping.
MarginalPrior schur_marginalize(const Eigen::MatrixXd& h, const Eigen::VectorXd& eps,
                                const std::vector<int>& marginalized, const std::vector<int>& kept);

/// Information-form prior over selected state components, expressed around a
/// linearization point: cost 0.5 d^T H d - eps^T d with d = x - x_lin.
struct PriorFactor {
  std::vector<std::pair<std::int64_t, int>> variables;  // (kf id, tangent component)
  Eigen::MatrixXd hessian;
  Eigen::VectorXd rhs;
  std::vector<std::pair<std::int64_t, KFState>> linearization_points;

  const KFState& linearization_point(std::int64_t kf) const;
  /// Tangent offset of each variable from the linearization point.
  Eigen::VectorXd offset(const std::vector<std::pair<std::int64_t, KFState>>& current) const;
};

}  // namespace kfvio

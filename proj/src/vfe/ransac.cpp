#include "kfvio/vfe/ransac.hpp"

#include <cmath>
#include <random>

#include "kfvio/core/error.hpp"

namespace kfvio {

double epipolar_residual(const Vec3& f_prev, const Vec3& f_cur, const Mat3& cur_R_prev, const Vec3& t) {
  const Vec3 a = (cur_R_prev * f_prev).normalized();
  const Vec3 fc = f_cur.normalized();
  const Vec3 m = t.cross(a);
  const double mn = m.norm();
  if (t.norm() < 1e-12 || mn < 1e-9 * t.norm()) return a.cross(fc).norm();
  return std::abs(fc.dot(m)) / mn;
}

namespace {

std::vector<int> mono_inliers(const std::vector<Vec3>& fp, const std::vector<Vec3>& fc, const Mat3& R, const Vec3& t,
                              double thr) {
  std::vector<int> in;
  for (std::size_t i = 0; i < fp.size(); ++i)
    if (epipolar_residual(fp[i], fc[i], R, t) < thr) in.push_back(static_cast<int>(i));
  return in;
}

}  // namespace

RansacResult mono_ransac_2pt(const std::vector<Vec3>& f_prev, const std::vector<Vec3>& f_cur, const Mat3& R,
                             const RansacParams& prm) {
  if (f_prev.size() != f_cur.size()) fail(ErrorCode::kInvalidArgument, "mono_ransac_2pt: size mismatch");
  if (f_prev.size() < 2) fail(ErrorCode::kInsufficientData, "mono_ransac_2pt: need at least 2 correspondences");
  std::mt19937_64 rng(prm.seed);
  std::uniform_int_distribution<std::size_t> pick(0, f_prev.size() - 1);

  RansacResult best;
  best.inliers = mono_inliers(f_prev, f_cur, R, Vec3::Zero(), prm.threshold);
  best.rotation_only = true;
  for (int it = 0; it < prm.iterations; ++it) {
    ++best.iterations;
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    while (j == i) j = pick(rng);
    const Vec3 n1 = (R * f_prev[i]).cross(f_cur[i]);
    const Vec3 n2 = (R * f_prev[j]).cross(f_cur[j]);
    const Vec3 t = n1.cross(n2);
    if (t.norm() < 1e-12) continue;
    auto in = mono_inliers(f_prev, f_cur, R, t.normalized(), prm.threshold);
    if (in.size() > best.inliers.size()) {
      best.inliers = std::move(in);
      best.model = t.normalized();
      best.rotation_only = false;
    }
  }
  return best;
}

RansacResult stereo_ransac_1pt(const std::vector<Vec3>& p_prev, const std::vector<Vec3>& p_cur, const Mat3& R,
                               const RansacParams& prm, const std::vector<double>& scale) {
  if (p_prev.size() != p_cur.size() || (!scale.empty() && scale.size() != p_prev.size()))
    fail(ErrorCode::kInvalidArgument, "stereo_ransac_1pt: size mismatch");
  if (p_prev.empty()) fail(ErrorCode::kInsufficientData, "stereo_ransac_1pt: no point pairs");
  const std::size_t n = p_prev.size();
  std::vector<Vec3> shift(n);
  for (std::size_t i = 0; i < n; ++i) shift[i] = p_cur[i] - R * p_prev[i];
  auto inliers_of = [&](const Vec3& t) {
    std::vector<int> in;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = scale.empty() ? 1.0 : scale[i];
      if ((shift[i] - t).norm() / s < prm.threshold) in.push_back(static_cast<int>(i));
    }
    return in;
  };

  std::mt19937_64 rng(prm.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  RansacResult best;
  const int iters = n == 1 ? 1 : prm.iterations;
  for (int it = 0; it < iters; ++it) {
    ++best.iterations;
    const Vec3 t = shift[n == 1 ? 0 : pick(rng)];
    auto in = inliers_of(t);
    if (in.size() > best.inliers.size()) {
      best.inliers = std::move(in);
      best.model = t;
    }
  }
  // Refit on the consensus set once and keep it if it does not shrink.
  if (!best.inliers.empty()) {
    Vec3 mean = Vec3::Zero();
    for (int i : best.inliers) mean += shift[static_cast<std::size_t>(i)];
    mean /= static_cast<double>(best.inliers.size());
    auto in = inliers_of(mean);
    if (in.size() >= best.inliers.size()) {
      best.inliers = std::move(in);
      best.model = mean;
    }
  }
  return best;
}

}  // namespace kfvio

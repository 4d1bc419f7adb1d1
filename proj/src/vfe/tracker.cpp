#include "kfvio/vfe/tracker.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "kfvio/core/error.hpp"

namespace kfvio {
namespace {

TrackResult track_one(const Pyramid& prev, const Pyramid& cur, const Vec2& p0, const LkParams& prm) {
  TrackResult res;
  const int levels = static_cast<int>(prev.size());
  const int half = prm.window / 2;
  const int n = prm.window * prm.window;
  std::vector<double> tmpl(static_cast<std::size_t>(n)), gx(tmpl.size()), gy(tmpl.size());
  Vec2 guess = Vec2::Zero();

  for (int level = levels - 1; level >= 0; --level) {
    const Image& I = prev[static_cast<std::size_t>(level)];
    const Image& J = cur[static_cast<std::size_t>(level)];
    const double scale = std::ldexp(1.0, -level);
    const Vec2 p = p0 * scale;
    if (!I.contains(p.x(), p.y())) return res;

    Eigen::Matrix2d G = Eigen::Matrix2d::Zero();
    int k = 0;
    for (int dy = -half; dy <= half; ++dy)
      for (int dx = -half; dx <= half; ++dx, ++k) {
        const double x = p.x() + dx, y = p.y() + dy;
        tmpl[k] = I.sample(x, y);
        gx[k] = 0.5 * (I.sample(x + 1, y) - I.sample(x - 1, y));
        gy[k] = 0.5 * (I.sample(x, y + 1) - I.sample(x, y - 1));
        G(0, 0) += gx[k] * gx[k];
        G(0, 1) += gx[k] * gy[k];
        G(1, 1) += gy[k] * gy[k];
      }
    G(1, 0) = G(0, 1);
    const double tr = G.trace(), det = G.determinant();
    const double min_eig = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4 * det)));
    if (min_eig / n < prm.min_eigenvalue) return res;
    const Eigen::Matrix2d Ginv = G.inverse();

    Vec2 v = Vec2::Zero();
    for (int it = 0; it < prm.iterations; ++it) {
      ++res.iterations;
      const Vec2 q = p + guess + v;
      if (!J.contains(q.x(), q.y(), -half)) return res;
      Vec2 b = Vec2::Zero();
      k = 0;
      for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx, ++k) {
          const double diff = tmpl[k] - J.sample(q.x() + dx, q.y() + dy);
          b.x() += diff * gx[k];
          b.y() += diff * gy[k];
        }
      const Vec2 eta = Ginv * b;
      if (!eta.allFinite()) return res;
      v += eta;
      if (eta.norm() < prm.epsilon) break;
    }
    guess = level > 0 ? Vec2(2.0 * (guess + v)) : Vec2(guess + v);
  }

  const Vec2 q = p0 + guess;
  const Image& I = prev.front();
  const Image& J = cur.front();
  if (!q.allFinite() || !J.contains(q.x(), q.y(), 1.0)) return res;
  double err = 0.0;
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx)
      err += std::abs(I.sample(p0.x() + dx, p0.y() + dy) - J.sample(q.x() + dx, q.y() + dy));
  if (err / n > prm.max_mean_error) return res;
  res.ok = true;
  res.position = q;
  return res;
}

}  // namespace

std::vector<TrackResult> track_features(const Pyramid& prev, const Pyramid& cur, const std::vector<Vec2>& points,
                                        const LkParams& params) {
  if (prev.size() != cur.size() || prev.empty())
    fail(ErrorCode::kInvalidArgument, "track_features: pyramid depth mismatch");
  if (params.window < 3 || params.window % 2 == 0) fail(ErrorCode::kConfig, "track_features: window must be odd >= 3");
  std::vector<TrackResult> out;
  out.reserve(points.size());
  for (const Vec2& p : points) out.push_back(track_one(prev, cur, p, params));
  return out;
}

}  // namespace kfvio

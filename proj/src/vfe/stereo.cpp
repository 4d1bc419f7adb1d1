#include "kfvio/vfe/stereo.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "kfvio/core/error.hpp"

namespace kfvio {

std::optional<StereoMatch> stereo_match(const Image& left, const Image& right, const Vec2& px,
                                        const StereoMatchParams& prm) {
  if (prm.template_width % 2 == 0 || prm.template_height % 2 == 0 || prm.search_width < prm.template_width ||
      prm.search_height < prm.template_height)
    fail(ErrorCode::kConfig, "stereo_match: template must be odd and fit in the search region");
  const int hw = prm.template_width / 2, hh = prm.template_height / 2;
  if (!left.contains(px.x(), px.y(), 0.0) || px.x() - hw < 0 || px.x() + hw > left.width() - 1 || px.y() - hh < 0 ||
      px.y() + hh > left.height() - 1)
    return std::nullopt;
  const int max_disp = std::min(prm.search_width - prm.template_width, static_cast<int>(std::floor(px.x() - hw)));
  if (max_disp < 0) return std::nullopt;

  const int tw = prm.template_width, th = prm.template_height;
  std::vector<float> tmpl(static_cast<std::size_t>(tw * th));
  for (int j = 0; j < th; ++j)
    for (int i = 0; i < tw; ++i) tmpl[j * tw + i] = left.sample(px.x() - hw + i, px.y() - hh + j);

  // The right band is sampled at the same subpixel phase as the template so
  // that each candidate disparity is an integer shift into it.
  const int band_w = tw + max_disp;
  std::vector<float> band(static_cast<std::size_t>(band_w * th));
  const double x0 = px.x() - hw - max_disp;
  for (int j = 0; j < th; ++j)
    for (int i = 0; i < band_w; ++i) band[j * band_w + i] = right.sample(x0 + i, px.y() - hh + j);

  std::vector<double> cost(static_cast<std::size_t>(max_disp + 1));
  for (int d = 0; d <= max_disp; ++d) {
    const int off = max_disp - d;
    double s = 0.0;
    for (int j = 0; j < th; ++j)
      for (int i = 0; i < tw; ++i) s += std::abs(tmpl[j * tw + i] - band[j * band_w + off + i]);
    cost[d] = s;
  }
  int best = 0;
  for (int d = 1; d <= max_disp; ++d)
    if (cost[d] < cost[best]) best = d;
  double second = std::numeric_limits<double>::infinity();
  for (int d = 0; d <= max_disp; ++d)
    if (std::abs(d - best) > 2) second = std::min(second, cost[d]);

  StereoMatch m;
  m.best_sad = cost[best];
  m.second_sad = second;
  if (std::isfinite(second) && cost[best] >= prm.ratio * second) return std::nullopt;
  m.disparity = best;
  if (best > 0 && best < max_disp) {
    const double a = cost[best - 1], b = cost[best], c = cost[best + 1];
    const double den = a - 2 * b + c;
    if (den > 0) m.disparity += 0.5 * (a - c) / den;
  }
  return m;
}

Vec3 triangulate(const Vec2& px, double disparity, const RectifiedCamera& cam, double min_disparity) {
  if (!(disparity > min_disparity) || !(disparity > 0.0))
    fail(ErrorCode::kTooFar, "triangulate: disparity " + std::to_string(disparity) + " px too small");
  const double z = cam.fx * cam.baseline / disparity;
  return {(px.x() - cam.cx) * z / cam.fx, (px.y() - cam.cy) * z / cam.fy, z};
}

}  // namespace kfvio

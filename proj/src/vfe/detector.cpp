#include "kfvio/vfe/detector.hpp"

#include <algorithm>
#include <cmath>

#include "kfvio/core/error.hpp"

namespace kfvio {

double shi_tomasi_score(const Image& image, int x, int y) {
  double a = 0, b = 0, c = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const int u = x + dx, v = y + dy;
      const double gx = 0.5 * (image.at(u + 1, v) - image.at(u - 1, v));
      const double gy = 0.5 * (image.at(u, v + 1) - image.at(u, v - 1));
      a += gx * gx;
      b += gx * gy;
      c += gy * gy;
    }
  return 0.5 * (a + c - std::sqrt((a - c) * (a - c) + 4 * b * b));
}

int grid_cell(const DetectorParams& params, int width, int height, const Vec2& pixel) {
  const int cx = std::clamp(static_cast<int>(pixel.x() * params.grid_cols / width), 0, params.grid_cols - 1);
  const int cy = std::clamp(static_cast<int>(pixel.y() * params.grid_rows / height), 0, params.grid_rows - 1);
  return cy * params.grid_cols + cx;
}

std::vector<Candidate> detect_candidates(const Image& image, const DetectorParams& params) {
  if (params.grid_cols <= 0 || params.grid_rows <= 0) fail(ErrorCode::kConfig, "detector: empty grid");
  const int w = image.width(), h = image.height();
  const int border = std::max(params.border, 2);
  std::vector<Candidate> best(static_cast<std::size_t>(params.grid_cols * params.grid_rows));
  for (std::size_t i = 0; i < best.size(); ++i) best[i].cell = static_cast<int>(i);
  for (int y = border; y < h - border; ++y)
    for (int x = border; x < w - border; ++x) {
      const double s = shi_tomasi_score(image, x, y);
      if (s < params.min_score) continue;
      Candidate& c = best[static_cast<std::size_t>(grid_cell(params, w, h, Vec2(x, y)))];
      if (s > c.score) {
        c.score = s;
        c.pixel = Vec2(x, y);
      }
    }
  std::vector<Candidate> out;
  for (const Candidate& c : best)
    if (c.score > 0.0) out.push_back(c);
  return out;
}

std::vector<Vec2> select_features(const std::vector<Candidate>& candidates, const std::vector<Vec2>& existing,
                                  int needed, int width, int height, const DetectorParams& params) {
  std::vector<Vec2> chosen;
  if (needed <= 0) return chosen;
  std::vector<int> population(static_cast<std::size_t>(params.grid_cols * params.grid_rows), 0);
  for (const Vec2& p : existing) ++population[static_cast<std::size_t>(grid_cell(params, width, height, p))];

  // One candidate per cell, so a single ordering by (population, -score) is
  // the same as repeatedly drawing from the emptiest cell.
  std::vector<const Candidate*> order;
  for (const Candidate& c : candidates) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(), [&](const Candidate* a, const Candidate* b) {
    const int pa = population[static_cast<std::size_t>(a->cell)], pb = population[static_cast<std::size_t>(b->cell)];
    return pa != pb ? pa < pb : a->score > b->score;
  });
  const double r2 = params.suppression_radius * params.suppression_radius;
  auto clear = [&](const Vec2& p, const std::vector<Vec2>& others) {
    return std::none_of(others.begin(), others.end(), [&](const Vec2& o) { return (o - p).squaredNorm() < r2; });
  };
  for (const Candidate* c : order) {
    if (static_cast<int>(chosen.size()) >= needed) break;
    if (clear(c->pixel, existing) && clear(c->pixel, chosen)) chosen.push_back(c->pixel);
  }
  return chosen;
}

}  // namespace kfvio

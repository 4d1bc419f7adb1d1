#include "kfvio/vfe/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "kfvio/core/error.hpp"

namespace kfvio {

void VfeConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kConfig, "vfe config: " + what);
  };
  need(pyramid_levels >= 1 && pyramid_levels <= 3, "pyramid levels must be in [1, 3]");
  need(lk_window >= 3 && lk_window <= 15 && lk_window % 2 == 1, "LK window must be odd in [3, 15]");
  need(lk_iterations >= 1 && lk_iterations <= 30, "LK iterations must be in [1, 30]");
  need(lk_epsilon > 0, "LK epsilon must be positive");
  need(template_width >= 3 && template_width <= 51 && template_width % 2 == 1, "template width must be odd, <= 51");
  need(template_height >= 1 && template_height <= 5 && template_height % 2 == 1, "template height must be odd, <= 5");
  need(search_width >= template_width && search_width <= 421, "search width must be in [template, 421]");
  need(search_height >= template_height && search_height <= 5, "search height must be in [template, 5]");
  need(max_features >= 1 && max_features <= 200, "features per frame must be in [1, 200]");
  need(detector.grid_cols >= 1 && detector.grid_rows >= 1, "grid must be non-empty");
  need(mono_ransac_iterations >= 1 && stereo_ransac_iterations >= 1, "RANSAC iterations must be positive");
  need(mono_ransac_threshold_px > 0 && stereo_ransac_threshold_px > 0, "RANSAC thresholds must be positive");
  need(stereo_ratio > 0 && stereo_ratio <= 1, "stereo ratio must be in (0, 1]");
  need(codec_block >= 1 && codec_bits >= 1 && codec_bits <= 8, "codec block >= 1, bits in [1, 8]");
  need(max_track_age >= 1 && max_track_age <= 10, "track age must be in [1, 10]");
}

LkParams VfeConfig::lk() const {
  LkParams p;
  p.window = lk_window;
  p.iterations = lk_iterations;
  p.epsilon = lk_epsilon;
  return p;
}

StereoMatchParams VfeConfig::stereo_match() const {
  return {template_width, template_height, search_width, search_height, stereo_ratio};
}

Feature& TrackingData::add(const Vec2& pixel) {
  if (features_.size() >= capacity_)
    fail(ErrorCode::kCapacity, "tracking data: full at " + std::to_string(capacity_) + " features");
  Feature f;
  f.id = next_id_++;
  f.pixel = pixel;
  features_.push_back(f);
  return features_.back();
}

void TrackingData::renew(Feature& f) {
  f.id = next_id_++;
  f.age = 0;
  f.right_pixel.reset();
}

bool TrackingData::remove(std::uint32_t id) {
  auto it = std::find_if(features_.begin(), features_.end(), [&](const Feature& f) { return f.id == id; });
  if (it == features_.end()) return false;
  features_.erase(it);
  return true;
}

VisionFrontend::VisionFrontend(const VfeConfig& config, const StereoCalib& calib, bool stereo)
    : config_(config), stereo_(stereo), rectifier_(calib, stereo), tracking_(static_cast<std::size_t>(config.max_features)) {
  config_.validate();
}

Image VisionFrontend::frame_image(const Frame& f) {
  if (!config_.compression) return to_image(f);
  ++counters_.codec_frames;
  if (config_.codec_block != 4 || config_.codec_bits != 5)
    return to_image(btc_roundtrip(f, config_.codec_block, config_.codec_bits));
  return decoded_image(encode_frame(f));
}

void VisionFrontend::track(const Frame& left) {
  Pyramid pyr = build_pyramid(frame_image(left), config_.pyramid_levels, config_.lk_window);
  if (!last_pyramid_.empty() && tracking_.size() > 0) {
    ++counters_.ft_runs;
    std::vector<Vec2> pts;
    for (const Feature& f : tracking_.features()) pts.push_back(f.pixel);
    const auto res = track_features(last_pyramid_, pyr, pts, config_.lk());
    std::vector<Feature> kept;
    for (std::size_t i = 0; i < res.size(); ++i) {
      counters_.ft_iterations += res[i].iterations;
      ++counters_.ft_features;
      if (!res[i].ok) continue;
      Feature f = tracking_.features()[i];
      f.pixel = res[i].position;
      kept.push_back(f);
    }
    tracking_.features() = std::move(kept);
  }
  last_pyramid_ = std::move(pyr);
}

void VisionFrontend::process_frame(const Frame& left) { track(left); }

std::vector<KeyframeObservation> VisionFrontend::process_keyframe(const Frame& left, const Frame* right,
                                                                  const Mat3& body_R_delta) {
  if (stereo_ && right == nullptr) fail(ErrorCode::kInvalidArgument, "process_keyframe: stereo mode needs a right frame");
  track(left);
  ++kf_count_;
  const RectifiedCamera& cam = rectifier_.camera();

  // UR + SM
  Image rect_left, rect_right;
  if (stereo_) {
    ++counters_.ur_runs;
    counters_.ur_pixels += 2LL * cam.width * cam.height;
    rect_left = frame_image(rectifier_.remap(left, false));
    rect_right = frame_image(rectifier_.remap(*right, true));
  }
  const StereoMatchParams smp = config_.stereo_match();
  auto measure = [&](const Feature& f, KfMemo& memo) -> std::optional<double> {
    memo.rect = rectifier_.rectify_point(f.pixel, false);
    memo.point.reset();
    if (!stereo_) return std::nullopt;
    ++counters_.sm_queries;
    counters_.sm_sad_ops += static_cast<std::int64_t>(smp.template_width) * smp.template_height *
                            (smp.search_width - smp.template_width + 1);
    const auto m = kfvio::stereo_match(rect_left, rect_right, memo.rect, smp);
    if (!m || m->disparity <= config_.min_disparity) return std::nullopt;
    ++counters_.sm_matches;
    memo.point = triangulate(memo.rect, m->disparity, cam, config_.min_disparity);
    return m->disparity;
  };

  std::vector<KfMemo> memo(tracking_.size());
  std::vector<std::optional<double>> disp(tracking_.size());
  if (stereo_) ++counters_.sm_runs;
  for (std::size_t i = 0; i < tracking_.size(); ++i) {
    try {
      disp[i] = measure(tracking_.features()[i], memo[i]);
    } catch (const Error&) {
      memo[i].rect = Vec2::Constant(std::numeric_limits<double>::quiet_NaN());
    }
  }

  // GV on features seen at the previous keyframe under the same id.
  std::vector<bool> reject(tracking_.size(), false);
  for (std::size_t i = 0; i < tracking_.size(); ++i) reject[i] = !memo[i].rect.allFinite();
  if (!last_kf_.empty()) {
    ++counters_.gv_runs;
    std::map<std::uint32_t, const KfMemo*> prev;
    for (const auto& [id, m] : last_kf_) prev[id] = &m;
    const Mat3& bRc = cam.body_T_cam.rotation;
    const Mat3 cur_R_prev = bRc.transpose() * body_R_delta.transpose() * bRc;
    std::vector<std::size_t> mono_idx, stereo_idx;
    std::vector<Vec3> fp, fc, pp, pc;
    std::vector<double> scale;
    for (std::size_t i = 0; i < tracking_.size(); ++i) {
      if (reject[i]) continue;
      auto it = prev.find(tracking_.features()[i].id);
      if (it == prev.end()) continue;
      mono_idx.push_back(i);
      fp.push_back(rectifier_.bearing(it->second->rect));
      fc.push_back(rectifier_.bearing(memo[i].rect));
      if (it->second->point && memo[i].point) {
        stereo_idx.push_back(i);
        pp.push_back(*it->second->point);
        pc.push_back(*memo[i].point);
        const double z = std::max(pp.back().z(), pc.back().z());
        scale.push_back(z / cam.fx * (1.0 + z / std::max(cam.baseline, 1e-9)));
      }
    }
    const std::uint64_t seed = config_.seed * 0x9E3779B97F4A7C15ULL + kf_count_;
    if (mono_idx.size() >= 2) {
      const auto r = mono_ransac_2pt(fp, fc, cur_R_prev,
                                     {config_.mono_ransac_iterations, config_.mono_ransac_threshold_px / cam.fx, seed});
      counters_.gv_mono_hypotheses += r.iterations;
      std::vector<bool> ok(mono_idx.size(), false);
      for (int k : r.inliers) ok[static_cast<std::size_t>(k)] = true;
      for (std::size_t k = 0; k < mono_idx.size(); ++k)
        if (!ok[k]) reject[mono_idx[k]] = true;
    }
    if (!stereo_idx.empty()) {
      const auto r = stereo_ransac_1pt(pp, pc, cur_R_prev,
                                       {config_.stereo_ransac_iterations, config_.stereo_ransac_threshold_px, seed + 1},
                                       scale);
      counters_.gv_stereo_hypotheses += r.iterations;
      std::vector<bool> ok(stereo_idx.size(), false);
      for (int k : r.inliers) ok[static_cast<std::size_t>(k)] = true;
      for (std::size_t k = 0; k < stereo_idx.size(); ++k)
        if (!ok[k]) reject[stereo_idx[k]] = true;
    }
  }

  std::vector<Feature> kept;
  std::vector<KfMemo> kept_memo;
  std::vector<std::optional<double>> kept_disp;
  for (std::size_t i = 0; i < tracking_.size(); ++i) {
    if (reject[i]) {
      ++counters_.gv_rejected;
      continue;
    }
    kept.push_back(tracking_.features()[i]);
    kept_memo.push_back(memo[i]);
    kept_disp.push_back(disp[i]);
  }
  tracking_.features() = std::move(kept);

  // FD tops the set back up on the raw left frame.
  const int needed = config_.max_features - static_cast<int>(tracking_.size());
  if (needed > 0) {
    ++counters_.fd_runs;
    counters_.fd_pixels += static_cast<std::int64_t>(left.width()) * left.height();
    const Image raw = to_image(left);
    std::vector<Vec2> existing;
    for (const Feature& f : tracking_.features()) existing.push_back(f.pixel);
    const auto picked = select_features(detect_candidates(raw, config_.detector), existing, needed, left.width(),
                                        left.height(), config_.detector);
    for (const Vec2& p : picked) {
      KfMemo m;
      std::optional<double> d;
      try {
        d = measure(Feature{0, p, std::nullopt, 0}, m);
      } catch (const Error&) {
        continue;
      }
      tracking_.add(p);
      kept_memo.push_back(m);
      kept_disp.push_back(d);
      ++counters_.fd_new;
    }
  }

  std::vector<KeyframeObservation> out;
  last_kf_.clear();
  for (std::size_t i = 0; i < tracking_.size(); ++i) {
    Feature& f = tracking_.features()[i];
    const KfMemo& m = kept_memo[i];
    KeyframeObservation o;
    o.id = f.id;
    o.coords = Vec3(m.rect.x(), std::numeric_limits<double>::quiet_NaN(), m.rect.y());
    if (kept_disp[i]) {
      o.coords.y() = m.rect.x() - *kept_disp[i];
      f.right_pixel = Vec2(o.coords.y(), m.rect.y());
    } else {
      f.right_pixel.reset();
    }
    o.point = m.point;
    out.push_back(o);
    ++f.age;
    if (f.age >= config_.max_track_age) {
      tracking_.renew(f);
    } else {
      last_kf_.emplace_back(f.id, m);
    }
  }
  return out;
}

void VisionFrontend::drop(const std::vector<std::uint32_t>& ids) {
  for (std::uint32_t id : ids) {
    tracking_.remove(id);
    std::erase_if(last_kf_, [&](const auto& e) { return e.first == id; });
  }
}

}  // namespace kfvio

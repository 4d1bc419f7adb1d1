#include "kfvio/pipeline/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "kfvio/backend/hessian.hpp"
#include "kfvio/framecodec/codec.hpp"

namespace kfvio {

BackendMacModel backend_mac_model(int features, int horizon, int feature_age, bool stereo) {
  BackendMacModel m;
  const int age = std::min(feature_age, horizon);
  const double F = features, N = horizon, k = age;
  m.tracks = F + F * (N - 1.0) / age;
  m.observations_per_track = age;
  const double rows = (stereo ? 3.0 : 2.0) * k;
  // J^T J over the pose+landmark columns, then the landmark Schur complement
  m.vision_macs = m.tracks * (rows * (6 * k + 3) * (6 * k + 3) + 108.0 * k * k);
  m.imu_macs = (N - 1.0) * (30.0 * 30.0 * 9.0 + 30.0 * 9.0 * 9.0);
  const HessianPattern pattern(horizon, age);
  m.factor_macs = static_cast<double>(pattern.sparse_factor_macs());
  m.dense_factor_macs = static_cast<double>(pattern.dense_factor_macs());
  m.solve_macs = 2.0 * static_cast<double>(pattern.stored_entries());
  return m;
}

ModelReport model_report(const PipelineConfig& cfg, int width, int height) {
  ModelReport r;
  r.width = width;
  r.height = height;
  const int N = cfg.backend.horizon, A = std::min(cfg.backend.feature_age, N), F = cfg.vfe.max_features;

  // Frame(1), Frame(2) for tracking plus rectified left/right for matching
  const int frames = cfg.stereo ? 4 : 2;
  const double raw = static_cast<double>(frames) * width * height;
  const double blocks = static_cast<double>((width + 3) / 4) * ((height + 3) / 4);
  const double compressed = cfg.vfe.compression ? frames * std::ceil(blocks * Block26::kBits / 8.0) : raw;
  r.memory.push_back({"Frame buffers", raw, compressed, 4.4});
  r.codec_raw_ratio = 128.0 / Block26::kBits;

  const double rows = static_cast<double>(N) * F * A;  // 40,000 at the maxima
  const double dense = static_cast<double>(N) * F;     // 4,000
  r.track_store_flat_bits = rows * (5 + 3 * 64);
  r.track_store_two_stage_bits = rows * (5 + 12) + dense * (3 * 64);
  r.track_store_pointer_only_bits = rows * 12 + dense * (5 + 3 * 64);
  r.memory.push_back({"Track store", r.track_store_flat_bits / 8, r.track_store_two_stage_bits / 8, 5.4});

  const HessianPattern pattern(N, A);
  const double dim = 15.0 * N;
  r.memory.push_back({"Hessian", dim * dim * 8, static_cast<double>(pattern.stored_entries()) * 8, 5.2});
  r.hessian_envelope_density = pattern.envelope_density();
  r.hessian_pattern_density = pattern.density();
  r.dense_solver_macs = pattern.dense_factor_macs();
  r.sparse_solver_macs = pattern.sparse_factor_macs();
  r.backend = backend_mac_model(F, N, A, cfg.stereo);
  return r;
}

std::string format_model_report(const ModelReport& r) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %12s %12s %9s %9s\n", "block", "before kB", "after kB", "saving", "reference");
  os << line;
  for (const MemoryRow& m : r.memory) {
    std::snprintf(line, sizeof line, "%-16s %12.1f %12.1f %8.2fx %8.1fx\n", m.block.c_str(), m.before / 1000.0,
                  m.after / 1000.0, m.ratio(), m.reference_ratio);
    os << line;
  }
  std::snprintf(line, sizeof line, "codec raw ratio (128/26 bits per block): %.2fx\n", r.codec_raw_ratio);
  os << line;
  std::snprintf(line, sizeof line, "track store, 12-bit rows + 197-bit payloads: %.2fx\n",
                r.track_store_flat_bits / r.track_store_pointer_only_bits);
  os << line;
  std::snprintf(line, sizeof line, "Hessian triangle density: pattern %.3f, fill envelope %.3f\n",
                r.hessian_pattern_density, r.hessian_envelope_density);
  os << line;
  std::snprintf(line, sizeof line, "solver MACs: dense %lld, zero-skipping %lld (%.2fx, reference 7.2x)\n",
                static_cast<long long>(r.dense_solver_macs), static_cast<long long>(r.sparse_solver_macs),
                static_cast<double>(r.dense_solver_macs) / static_cast<double>(r.sparse_solver_macs));
  os << line;
  std::snprintf(line, sizeof line, "backend MACs per keyframe: %.4g (vision %.4g over %.1f tracks)\n", r.backend.total(),
                r.backend.vision_macs, r.backend.tracks);
  os << line;
  return os.str();
}

}  // namespace kfvio

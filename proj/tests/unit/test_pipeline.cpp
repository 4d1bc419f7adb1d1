#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "kfvio/core/error.hpp"
#include "kfvio/pipeline/run.hpp"
#include "pipeline_driver.hpp"

using namespace kfvio;
namespace fs = std::filesystem;

namespace {

ScenarioConfig short_wave(double duration = 2.0, const std::string& preset = "wave") {
  ScenarioConfig c = scenario_preset(preset);
  c.duration_s = duration;
  return c;
}

PipelineConfig image_config(const std::string& policy, bool stereo = true) {
  PipelineConfig c;
  c.keyframes = KeyframePolicy::parse(policy);
  c.stereo = stereo;
  c.sync();
  return c;
}

std::vector<TrajectorySample> from_ground_truth(const GroundTruth& gt, std::size_t stride) {
  std::vector<TrajectorySample> out;
  for (std::size_t i = 0; i < gt.samples().size(); i += stride) {
    const auto& s = gt.samples()[i];
    TrajectorySample t;
    t.timestamp_ns = s.timestamp_ns;
    t.state.rotation = s.rotation;
    t.state.position = s.position;
    t.state.velocity = s.velocity;
    out.push_back(t);
  }
  return out;
}

// Counters that must stay untouched on non-keyframes.
struct KeyframeOnlyOps {
  std::int64_t fd, ur, sm, gv, backend;
  bool operator==(const KeyframeOnlyOps&) const = default;
};

KeyframeOnlyOps keyframe_only_ops(const VioPipeline& vio) {
  const VfeCounters& v = vio.vfe_counters();
  const BackendCounters& b = vio.backend_counters();
  return {v.fd_runs + v.fd_pixels + v.fd_new, v.ur_runs + v.ur_pixels,
          v.sm_runs + v.sm_queries + v.sm_matches + v.sm_sad_ops,
          v.gv_runs + v.gv_mono_hypotheses + v.gv_stereo_hypotheses + v.gv_rejected,
          b.steps + b.imu_linearizations + b.vision_linearizations + b.marginalizations + b.linearize_macs +
              b.marginalize_macs + b.factor_macs + b.solve_macs};
}

}  // namespace

TEST(KeyframePolicy, ParseAndPrint) {
  const KeyframePolicy r = KeyframePolicy::parse("rate:4");
  EXPECT_EQ(r.kind, KeyframePolicy::Kind::kRate);
  EXPECT_EQ(r.rate, 4);
  EXPECT_EQ(r.str(), "rate:4");
  const KeyframePolicy d = KeyframePolicy::parse("dist:0.05");
  EXPECT_EQ(d.kind, KeyframePolicy::Kind::kDistance);
  EXPECT_DOUBLE_EQ(d.distance, 0.05);
  EXPECT_EQ(KeyframePolicy::parse(d.str()).distance, 0.05);
  for (const char* bad : {"rate:0", "rate:2.5", "dist:0", "every:4", "rate:", "4"}) EXPECT_THROW(KeyframePolicy::parse(bad), Error) << bad;
}

TEST(KeyframePolicy, FixedRate) {
  const KeyframePolicy p = KeyframePolicy::parse("rate:4");
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(select_keyframe(p, i, 0.0), i % 4 == 0) << i;
}

TEST(KeyframePolicy, FixedDistance) {
  const KeyframePolicy p = KeyframePolicy::parse("dist:0.05");
  // 1 m/s at 20 fps travels 5 cm per frame.
  const double per_frame = 1.0 * (1.0 / 20.0);
  for (std::size_t i = 1; i < 20; ++i) EXPECT_TRUE(select_keyframe(p, i, per_frame));
  EXPECT_TRUE(select_keyframe(p, 0, 0.0));
  EXPECT_FALSE(select_keyframe(p, 7, 0.0));
  EXPECT_FALSE(select_keyframe(p, 7, 0.0499));
}

TEST(KeyframePolicy, StationaryDistanceRunKeepsOnlyBootstrapKeyframe) {
  const SyntheticScenario s(short_wave(2.0, "static"));
  PipelineConfig c = image_config("dist:0.05");
  c.frontend = FrontendKind::kOracle;
  const RunReport r = run_sequence(c, s, &s);
  ASSERT_EQ(r.frames.size(), s.frame_count());
  EXPECT_EQ(r.keyframes.size(), 1u);
  EXPECT_TRUE(r.frames.front().keyframe);
}

TEST(Config, MaximaAndValidation) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.backend.horizon, 20);
  EXPECT_EQ(c.backend.feature_age, 10);
  EXPECT_EQ(c.max_tracks, 4000);
  EXPECT_EQ(c.vfe.max_features, 200);
  auto expect_invalid = [](auto mutate) {
    PipelineConfig x;
    mutate(x);
    x.sync();
    EXPECT_THROW(x.validate(), Error);
  };
  expect_invalid([](PipelineConfig& x) { x.backend.horizon = 21; });
  expect_invalid([](PipelineConfig& x) { x.backend.feature_age = 11; });
  expect_invalid([](PipelineConfig& x) { x.max_tracks = 4001; });
  expect_invalid([](PipelineConfig& x) { x.vfe.max_features = 201; });
  expect_invalid([](PipelineConfig& x) {
    x.backend.horizon = 5;
    x.backend.feature_age = 8;
  });
}

TEST(Config, YamlParsing) {
  const PipelineConfig c = parse_pipeline_config(
      "preset: easy\nmode: mono\nkf_policy: dist:0.1\ncompression: false\nseed: 7\n"
      "vfe:\n  lk_iterations: 20\nbackend:\n  pixel_sigma: 0.5\n");
  EXPECT_FALSE(c.stereo);
  EXPECT_EQ(c.vfe.max_features, 35);
  EXPECT_EQ(c.backend.horizon, 10);
  EXPECT_EQ(c.keyframes.kind, KeyframePolicy::Kind::kDistance);
  EXPECT_FALSE(c.vfe.compression);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.vfe.lk_iterations, 20);
  EXPECT_DOUBLE_EQ(c.backend.vision.pixel_sigma, 0.5);
  for (const char* bad : {"horizon: 10\n", "vfe:\n  lk_iters: 3\n", "backend:\n  horizon: 30\n", "mode: tri\n",
                          "preset: MH_99\n"}) {
    try {
      parse_pipeline_config(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfig) << bad;
    }
  }
  EXPECT_THROW(load_pipeline_config("/nonexistent/kfvio.yaml"), Error);
}

TEST(Config, AdaptationPresets) {
  struct Row {
    const char* name;
    int features, horizon;
  };
  for (const Row& r : {Row{"MH_01", 35, 10}, Row{"MH_02", 35, 10}, Row{"MH_03", 35, 10}, Row{"MH_04", 150, 10},
                       Row{"MH_05", 100, 15}, Row{"V1_01", 35, 10}, Row{"V1_02", 35, 10}, Row{"V1_03", 35, 10},
                       Row{"V2_01", 50, 10}, Row{"V2_02", 35, 10}, Row{"V2_03", 50, 15}, Row{"easy", 35, 10},
                       Row{"max", 200, 20}}) {
    const PipelineConfig c = adaptation_preset(r.name);
    EXPECT_EQ(c.vfe.max_features, r.features) << r.name;
    EXPECT_EQ(c.backend.horizon, r.horizon) << r.name;
    EXPECT_NO_THROW(c.validate());
  }
  EXPECT_EQ(adaptation_preset("MH_4").vfe.max_features, 150);
  EXPECT_EQ(adaptation_preset_names().size(), 13u);
}

TEST(Model, TrackStoreAndFrameBuffers) {
  const ModelReport m = model_report(PipelineConfig{});
  ASSERT_EQ(m.memory.size(), 3u);
  EXPECT_EQ(m.memory[0].block, "Frame buffers");
  EXPECT_DOUBLE_EQ(m.memory[0].before, 4.0 * 752 * 480);
  EXPECT_DOUBLE_EQ(m.memory[0].after, 4.0 * 73320);
  EXPECT_NEAR(m.codec_raw_ratio, 128.0 / 26.0, 1e-12);
  // 40000 slots of (5-bit id + 3 doubles) against 40000 12-bit pointers + 4000 payloads.
  EXPECT_DOUBLE_EQ(m.track_store_flat_bits, 40000.0 * 197);
  EXPECT_NEAR(m.memory[1].ratio(), 40000.0 * 197 / (40000.0 * 17 + 4000.0 * 192), 1e-12);
  EXPECT_NEAR(m.memory[1].ratio(), 5.4, 0.05 * 5.4);
  EXPECT_NEAR(m.track_store_flat_bits / m.track_store_pointer_only_bits, 7880000.0 / (480000 + 788000), 1e-12);

  PipelineConfig off;
  off.vfe.compression = false;
  EXPECT_DOUBLE_EQ(model_report(off).memory[0].ratio(), 1.0);
  PipelineConfig mono;
  mono.stereo = false;
  EXPECT_DOUBLE_EQ(model_report(mono).memory[0].before, 2.0 * 752 * 480);
  EXPECT_FALSE(format_model_report(m).empty());
}

TEST(Model, SolverScaling) {
  PipelineConfig n20, n10;
  n10.backend.horizon = 10;
  const ModelReport a = model_report(n20), b = model_report(n10);
  const double dense = static_cast<double>(a.dense_solver_macs) / static_cast<double>(b.dense_solver_macs);
  const double sparse = static_cast<double>(a.sparse_solver_macs) / static_cast<double>(b.sparse_solver_macs);
  EXPECT_NEAR(dense, 8.0, 0.5);
  EXPECT_LT(sparse, dense / 2);
  EXPECT_GT(static_cast<double>(a.dense_solver_macs) / static_cast<double>(a.sparse_solver_macs), 2.0);
}

TEST(Model, AdaptationMonotonicity) {
  for (bool stereo : {true, false}) {
    for (int h = 2; h <= 20; ++h) {
      const int age = std::min(h, 10);
      double prev = 0.0;
      for (int f = 5; f <= 200; f += 5) {
        const double macs = backend_mac_model(f, h, age, stereo).total();
        EXPECT_GE(macs, prev) << f << ' ' << h;
        prev = macs;
        if (h > 2) EXPECT_LE(backend_mac_model(f, h - 1, std::min(h - 1, 10), stereo).total(), macs);
      }
    }
  }
  const double max_macs = backend_mac_model(200, 20, 10, true).total();
  for (const auto& name : adaptation_preset_names()) {
    const PipelineConfig c = adaptation_preset(name);
    EXPECT_LE(backend_mac_model(c.vfe.max_features, c.backend.horizon, c.backend.feature_age, true).total(), max_macs);
  }
  EXPECT_GE(max_macs / backend_mac_model(35, 10, 10, true).total(), 4.0);
}

TEST(Evaluation, IdentityAndRigidOffset) {
  const SyntheticScenario s(short_wave(6.0));
  const auto est = from_ground_truth(s.ground_truth(), 10);
  const TrajectoryError e0 = evaluate_trajectory(est, s.ground_truth());
  EXPECT_LT(e0.ate_rmse, 1e-12);
  EXPECT_EQ(e0.matched, est.size());
  EXPECT_GT(e0.path_length, 0.5);

  const Pose offset{so3_exp(Vec3(0.1, -0.2, 0.7)), Vec3(3, -1, 2)};
  auto moved = est;
  for (auto& t : moved) {
    t.state.position = offset * t.state.position;
    t.state.rotation = offset.rotation * t.state.rotation;
  }
  const TrajectoryError e1 = evaluate_trajectory(moved, s.ground_truth());
  EXPECT_LT(e1.ate_rmse, 1e-9);
  // A pure yaw offset is also removed by the yaw-only alignment; a tilt is not.
  EXPECT_GT(e1.ate_rmse_yaw, 1e-3);
  const Pose yaw{so3_exp(Vec3(0, 0, 1.2)), Vec3(0.5, 0.5, -1)};
  auto yawed = est;
  for (auto& t : yawed) t.state.position = yaw * t.state.position;
  EXPECT_LT(evaluate_trajectory(yawed, s.ground_truth()).ate_rmse_yaw, 1e-9);
}

TEST(Evaluation, NormalizedIsPercentOfPath) {
  const SyntheticScenario s(short_wave(6.0));
  auto est = from_ground_truth(s.ground_truth(), 20);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 0.01);
  for (auto& t : est) t.state.position += Vec3(n(rng), n(rng), n(rng));
  const TrajectoryError e = evaluate_trajectory(est, s.ground_truth());
  EXPECT_GT(e.ate_rmse, 0.0);
  EXPECT_NEAR(e.normalized, 100.0 * e.ate_rmse / e.path_length, 1e-12);
  EXPECT_LE(e.ate_rmse, e.ate_rmse_yaw + 1e-12);
}

TEST(Evaluation, Errors) {
  const SyntheticScenario s(short_wave(1.0));
  const auto est = from_ground_truth(s.ground_truth(), 10);
  EXPECT_THROW(evaluate_trajectory({est.front()}, s.ground_truth()), Error);
  auto late = est;
  for (auto& t : late) t.timestamp_ns += 100'000'000'000;
  try {
    evaluate_trajectory(late, s.ground_truth());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
  }
}

TEST(Evaluation, AlignPointsRecoversTransform) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<Vec3> a, b;
  const Pose T{so3_exp(Vec3(0.3, 0.2, -1.0)), Vec3(1, 2, 3)};
  for (int i = 0; i < 50; ++i) {
    a.emplace_back(u(rng), u(rng), u(rng));
    b.push_back(T * a.back());
  }
  const Pose got = align_points(a, b, Alignment::kRigid);
  EXPECT_LT((got.rotation - T.rotation).norm(), 1e-12);
  EXPECT_LT((got.translation - T.translation).norm(), 1e-12);
  const Pose yaw_only = align_points(a, b, Alignment::kYaw);
  EXPECT_NEAR(yaw_only.rotation(2, 2), 1.0, 1e-12);
}

TEST(Bootstrap, GravityAlignment) {
  const Rotation tilt = so3_exp(Vec3(0.2, -0.15, 0.0));
  const Vec3 f = tilt.transpose() * Vec3(0, 0, 9.81);
  const Rotation R = gravity_aligned_rotation(f);
  EXPECT_TRUE(is_rotation(R, 1e-12));
  EXPECT_LT((R * f - Vec3(0, 0, 9.81)).norm(), 1e-12);
  // Yaw is fixed to zero: the body x axis has no world y component.
  EXPECT_NEAR((R * Vec3::UnitX()).y(), 0.0, 1e-12);

  const SyntheticScenario s(short_wave(1.0));
  PipelineConfig c = image_config("rate:4");
  c.frontend = FrontendKind::kOracle;
  VioPipeline vio(c, s.calibration(), s.imu_noise(), &s);
  std::vector<ImuSample> prefix(50);
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    prefix[i].timestamp_ns = static_cast<std::int64_t>(i) * 5'000'000;
    prefix[i].linear_acceleration = f;
  }
  vio.bootstrap(prefix);
  vio.process_frame(s.frame(0, true), prefix, 0);
  ASSERT_EQ(vio.keyframes().size(), 1u);
  const KFState& x0 = vio.keyframes().front().state;
  EXPECT_LT((x0.rotation * f - Vec3(0, 0, 9.81)).norm(), 1e-9);
  EXPECT_EQ(x0.position, Vec3::Zero());
}

TEST(Bootstrap, PredictStateFollowsPreintegration) {
  KFState x;
  x.rotation = so3_exp(Vec3(0.1, 0.2, 0.3));
  x.velocity = Vec3(1, 0, 0);
  Preintegrator p;
  ImuSample s;
  s.linear_acceleration = x.rotation.transpose() * Vec3(0, 0, 9.81);  // hover
  for (int k = 0; k < 100; ++k) p.integrate(s, 0.005);
  const KFState y = predict_state(x, p.finalize(0, 1), Vec3(0, 0, -9.81));
  EXPECT_LT((y.velocity - x.velocity).norm(), 1e-12);
  EXPECT_LT((y.position - Vec3(0.5, 0, 0)).norm(), 1e-12);
  EXPECT_LT((y.rotation - x.rotation).norm(), 1e-15);
}

TEST(Pipeline, FrameClassesFollowFixedRate) {
  const SyntheticScenario s(short_wave(1.2));
  PipelineConfig c = image_config("rate:4");
  c.frontend = FrontendKind::kOracle;
  const RunReport r = run_sequence(c, s, &s);
  const auto j = nlohmann::json::parse(report_json(r));
  EXPECT_EQ(j["frame_classes"], "KNNNKNNNKNNNKNNNKNNNKNNNK");
  EXPECT_EQ(r.keyframes.size(), 7u);
  EXPECT_EQ(r.frames.size(), s.frame_count());
}

TEST(Pipeline, TimestampRegressionIsStreamError) {
  const SyntheticScenario s(short_wave(1.0));
  PipelineConfig c = image_config("rate:4");
  c.frontend = FrontendKind::kOracle;
  VioPipeline vio(c, s.calibration(), s.imu_noise(), &s);
  vio.process_frame(s.frame(2, true), {}, 2);
  try {
    vio.process_frame(s.frame(1, true), {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStream);
  }
}

TEST(Pipeline, OracleFrontendNeedsScenario) {
  const SyntheticScenario s(short_wave(1.0));
  PipelineConfig c;
  c.frontend = FrontendKind::kOracle;
  EXPECT_THROW(VioPipeline(c, s.calibration(), s.imu_noise(), nullptr), Error);
}

// Property: on every non-keyframe, only feature tracking does work; every
// frame is classified once; non-keyframes never emit a state and never grow
// the track count.
TEST(Pipeline, ModeExclusivity) {
  const SyntheticScenario stereo_scene(short_wave(1.5));
  ScenarioConfig mono_cfg = short_wave(1.5);
  mono_cfg.stereo = false;
  const SyntheticScenario mono_scene(mono_cfg);
  for (const char* policy : {"rate:1", "rate:3", "rate:4", "rate:7", "dist:0.02"}) {
    for (bool stereo : {true, false}) {
      const SyntheticScenario& scene = stereo ? stereo_scene : mono_scene;
      VioPipeline vio(image_config(policy, stereo), scene.calibration(), scene.imu_noise());
      KeyframeOnlyOps before = keyframe_only_ops(vio);
      std::int64_t ft_before = 0;
      std::size_t tracked_before = 0, keyframes = 0;
      kfvio::testing::drive_pipeline(vio, scene, 20, [&](std::size_t i, bool emitted) {
        ASSERT_EQ(vio.frames().size(), i + 1);
        const FrameRecord& rec = vio.frames().back();
        EXPECT_EQ(emitted, rec.keyframe);
        const KeyframeOnlyOps after = keyframe_only_ops(vio);
        EXPECT_EQ(vio.vfe_counters().ft_runs, ft_before + (i == 0 ? 0 : 1)) << policy << " frame " << i;
        if (!rec.keyframe) {
          EXPECT_EQ(after, before) << policy << (stereo ? " stereo" : " mono") << " frame " << i;
          EXPECT_LE(rec.features, tracked_before);
        } else {
          ++keyframes;
        }
        before = after;
        ft_before = vio.vfe_counters().ft_runs;
        tracked_before = rec.features;
      });
      EXPECT_EQ(vio.keyframes().size(), keyframes);
      EXPECT_EQ(vio.frames().size(), 20u);
      EXPECT_TRUE(vio.frames().front().keyframe);
    }
  }
}

TEST(Pipeline, DeterministicReports) {
  const SyntheticScenario s(short_wave(1.5, "wave_noisy"));
  for (const char* policy : {"rate:2", "dist:0.03"}) {
    for (std::uint64_t seed : {1u, 99u}) {
      PipelineConfig c = image_config(policy);
      c.seed = seed;
      c.sync();
      const std::string a = report_json(run_sequence(c, s));
      const std::string b = report_json(run_sequence(c, s));
      EXPECT_EQ(a, b) << policy << " seed " << seed;
    }
  }
}

TEST(Pipeline, OracleRunTracksGroundTruth) {
  const SyntheticScenario s(short_wave(5.0));
  PipelineConfig c = image_config("rate:4");
  c.frontend = FrontendKind::kOracle;
  const RunReport r = run_sequence(c, s, &s);
  ASSERT_TRUE(r.error.has_value());
  EXPECT_LT(r.error->normalized, 0.5);
  EXPECT_EQ(r.trajectory.size(), r.keyframes.size());
  EXPECT_FALSE(r.map.empty());
}

TEST(Run, OpenDataset) {
  const DatasetHandle d = open_dataset("synthetic:circle");
  ASSERT_NE(d.synthetic, nullptr);
  EXPECT_GT(d.sequence->frame_count(), 0u);
  EXPECT_THROW(open_dataset("synthetic:nope"), Error);
  EXPECT_THROW(open_dataset("/nonexistent/euroc"), Error);
}

TEST(Run, OutputsAreWritten) {
  const SyntheticScenario s(short_wave(1.0));
  PipelineConfig c = image_config("rate:4");
  c.frontend = FrontendKind::kOracle;
  RunReport r = run_sequence(c, s, &s);
  r.dataset = "synthetic:wave";
  const fs::path dir = fs::temp_directory_path() / "kfvio_run_outputs";
  fs::remove_all(dir);
  write_run_outputs(r, dir);
  std::ifstream csv(dir / "trajectory.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "timestamp_ns,px,py,pz,qw,qx,qy,qz,vx,vy,vz");
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, r.trajectory.size());
  std::ifstream ply(dir / "map.ply");
  std::string magic;
  std::getline(ply, magic);
  EXPECT_EQ(magic, "ply");
  std::ifstream js(dir / "report.json");
  const auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["frames"], r.frames.size());
  EXPECT_EQ(j["dataset"], "synthetic:wave");
  EXPECT_DOUBLE_EQ(j["error"]["reference_percent"].get<double>(), 0.28);
  fs::remove_all(dir);
}

TEST(Run, CompressionSweep) {
  const SyntheticScenario s(short_wave(1.5));
  PipelineConfig c = image_config("rate:4");
  const auto points = sweep_compression(c, s, {{1, 8}, {4, 5}});
  ASSERT_EQ(points.size(), 2u);
  EXPECT_DOUBLE_EQ(points[0].memory_saving, 1.0);
  EXPECT_NEAR(points[1].memory_saving, 128.0 / 26.0, 1e-12);
  for (const auto& p : points) EXPECT_TRUE(p.error.has_value()) << p.failure;
  const std::string csv = sweep_csv(points);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "block,bits,bits_per_pixel,memory_saving,ate_rmse_m,normalized_percent,status");
  EXPECT_EQ(default_sweep().size(), 8u);
}

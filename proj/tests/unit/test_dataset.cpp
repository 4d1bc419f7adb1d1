#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kfvio/core/error.hpp"
#include "kfvio/dataset/euroc.hpp"
#include "kfvio/dataset/image_io.hpp"
#include "kfvio/dataset/synthetic.hpp"

using namespace kfvio;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("kfvio_ds_" + std::to_string(counter++) + "_" +
                                         ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

ScenarioConfig short_scenario(const std::string& preset, double duration = 1.0) {
  ScenarioConfig c = scenario_preset(preset);
  c.duration_s = duration;
  return c;
}

struct Kinematic {
  Mat3 R;
  Vec3 v, p;
};

Kinematic derivative(const Kinematic& x, const Vec3& w, const Vec3& f, const Vec3& g) {
  return {x.R * hat(w), x.R * f + g, x.v};
}

Kinematic axpy(const Kinematic& x, double h, const Kinematic& d) { return {x.R + h * d.R, x.v + h * d.v, x.p + h * d.p}; }

}  // namespace

TEST(Synthetic, StaticImuIsGravityOnly) {
  const SyntheticScenario s(short_scenario("static"));
  ASSERT_FALSE(s.imu().empty());
  for (const ImuSample& m : s.imu()) {
    EXPECT_EQ(m.angular_velocity, Vec3::Zero());
    EXPECT_LT((m.linear_acceleration - Vec3(0, 0, 9.81)).norm(), 1e-15);
  }
}

TEST(Synthetic, ConstantYawRate) {
  ScenarioConfig c = short_scenario("rotate", 2.0);
  c.angular_rate = 0.7;
  const SyntheticScenario s(c);
  for (const ImuSample& m : s.imu()) {
    EXPECT_LT((m.angular_velocity - Vec3(0, 0, 0.7)).norm(), 1e-15);
    EXPECT_LT((m.linear_acceleration - Vec3(0, 0, 9.81)).norm(), 1e-12);
  }
}

TEST(Synthetic, CircleSpecificForceMagnitude) {
  const SyntheticScenario s(short_scenario("circle", 5.0));
  const double r = 2.0, w = 0.5;
  const double expected = std::hypot(r * w * w, 9.81);
  for (const ImuSample& m : s.imu()) EXPECT_NEAR(m.linear_acceleration.norm(), expected, 1e-12);
}

TEST(Synthetic, RatesAndMonotoneStreams) {
  const SyntheticScenario s(short_scenario("wave", 2.0));
  EXPECT_EQ(s.imu().size(), 401u);
  EXPECT_EQ(s.frame_count(), 41u);
  for (std::size_t i = 1; i < s.imu().size(); ++i)
    EXPECT_EQ(s.imu()[i].timestamp_ns - s.imu()[i - 1].timestamp_ns, 5'000'000);
  for (std::size_t i = 1; i < s.frame_count(); ++i)
    EXPECT_EQ(s.frame_timestamp(i) - s.frame_timestamp(i - 1), 50'000'000);
  EXPECT_TRUE(s.ground_truth().covers(s.imu().front().timestamp_ns));
  EXPECT_TRUE(s.ground_truth().covers(s.imu().back().timestamp_ns));
  EXPECT_TRUE(s.ground_truth().covers(s.frame_timestamp(s.frame_count() - 1)));
}

// Classical RK4 with step 2*dt, using samples k, k+1, k+2 as the start,
// midpoint and end evaluations.
TEST(Synthetic, ImuIntegratesToGroundTruth) {
  const SyntheticScenario s(scenario_preset("wave"));
  const auto& imu = s.imu();
  const Vec3 g(0, 0, -9.81);
  const TrajectoryPoint start = s.trajectory(0.0);
  Kinematic x{start.rotation, start.velocity, start.position};
  const double h = 2 * static_cast<double>(imu[1].timestamp_ns - imu[0].timestamp_ns) * 1e-9;
  std::size_t k = 0;
  double worst = 0.0;
  for (; k + 2 < imu.size(); k += 2) {
    const ImuSample &a = imu[k], &m = imu[k + 1], &b = imu[k + 2];
    const Kinematic k1 = derivative(x, a.angular_velocity, a.linear_acceleration, g);
    const Kinematic k2 = derivative(axpy(x, h / 2, k1), m.angular_velocity, m.linear_acceleration, g);
    const Kinematic k3 = derivative(axpy(x, h / 2, k2), m.angular_velocity, m.linear_acceleration, g);
    const Kinematic k4 = derivative(axpy(x, h, k3), b.angular_velocity, b.linear_acceleration, g);
    x.R += h / 6 * (k1.R + 2 * k2.R + 2 * k3.R + k4.R);
    x.v += h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    x.p += h / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
    x.R = orthonormalize(x.R);
    const TrajectoryPoint truth = s.trajectory(static_cast<double>(b.timestamp_ns) * 1e-9);
    worst = std::max(worst, (x.p - truth.position).norm());
  }
  EXPECT_NEAR(static_cast<double>(imu[k].timestamp_ns) * 1e-9, 10.0, 1e-9);
  EXPECT_LT(worst, 1e-6);
}

TEST(Synthetic, ObservationsAreProjections) {
  const SyntheticScenario s(short_scenario("wave"));
  const StereoCalib& cal = s.calibration();
  for (std::size_t i : {0u, 7u, 19u}) {
    const auto gt = s.ground_truth().interpolate(s.frame_timestamp(i));
    const auto obs = s.observations(i);
    ASSERT_FALSE(obs.empty());
    for (const auto& o : obs) {
      const Vec3 lm = s.landmarks().at(o.landmark);
      const Pose world_T_body{gt.rotation, gt.position};
      const Vec3 pl = (world_T_body * cal.left.body_T_cam).inverse() * lm;
      EXPECT_LT((project(cal.left, pl) - o.left).norm(), 1e-9);
      ASSERT_TRUE(o.right.has_value());
      const Vec3 pr = (world_T_body * cal.right.body_T_cam).inverse() * lm;
      EXPECT_LT((project(cal.right, pr) - *o.right).norm(), 1e-9);
      EXPECT_NEAR(o.left.y(), o.right->y(), 1e-9);  // parallel rig
    }
  }
}

TEST(Synthetic, FramesRespectModeAndLimits) {
  const SyntheticScenario stereo(short_scenario("wave"));
  const FrameEvent ev = stereo.frame(3, true);
  ASSERT_TRUE(ev.right.has_value());
  EXPECT_EQ(ev.left.width(), 752);
  EXPECT_EQ(ev.left.height(), 480);
  EXPECT_FALSE(stereo.frame(3, false).right.has_value());

  ScenarioConfig mono_cfg = short_scenario("wave");
  mono_cfg.stereo = false;
  const SyntheticScenario mono(mono_cfg);
  EXPECT_FALSE(mono.frame(3, true).right.has_value());
  EXPECT_FALSE(mono.has_stereo());
}

TEST(Synthetic, RenderedDotsAreBright) {
  const SyntheticScenario s(short_scenario("wave"));
  const FrameEvent ev = s.frame(0, false);
  for (const auto& o : s.observations(0)) {
    const int x = static_cast<int>(std::lround(o.left.x())), y = static_cast<int>(std::lround(o.left.y()));
    EXPECT_GT(ev.left.at(x, y), 100) << o.landmark;
  }
}

TEST(Synthetic, DeterministicForSeed) {
  ScenarioConfig c = short_scenario("wave_noisy");
  const SyntheticScenario a(c), b(c);
  EXPECT_EQ(a.imu(), b.imu());
  EXPECT_EQ(a.landmarks(), b.landmarks());
  EXPECT_EQ(a.frame(5, true).left, b.frame(5, true).left);
  const auto oa = a.observations(5), ob = b.observations(5);
  ASSERT_EQ(oa.size(), ob.size());
  for (std::size_t i = 0; i < oa.size(); ++i) EXPECT_EQ(oa[i].left, ob[i].left);
  c.seed = 2;
  const SyntheticScenario other(c);
  EXPECT_NE(a.imu(), other.imu());
}

TEST(Synthetic, DegenerateAndBadConfigs) {
  ScenarioConfig behind = short_scenario("static");
  behind.landmark_placement = "box";
  behind.box_min = Vec3(-8, -1, -1);
  behind.box_max = Vec3(-4, 1, 1);
  try {
    SyntheticScenario s(behind);
    FAIL() << "expected degenerate scenario";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateScenario);
  }
  ScenarioConfig bad = short_scenario("wave");
  bad.trajectory = "spiral";
  EXPECT_THROW(SyntheticScenario{bad}, Error);
  EXPECT_THROW(scenario_preset("nope"), Error);
}

TEST(Synthetic, ScenarioYaml) {
  TempDir tmp;
  write_text(tmp.path() / "s.yaml", "trajectory: circle\nduration_s: 2.5\nlandmark_count: 30\nseed: 4\n");
  const ScenarioConfig c = load_scenario_config(tmp.path() / "s.yaml");
  EXPECT_EQ(c.trajectory, "circle");
  EXPECT_DOUBLE_EQ(c.duration_s, 2.5);
  EXPECT_EQ(c.landmark_count, 30);
  write_text(tmp.path() / "bad.yaml", "trajectory: circle\nlandmarks: 3\n");
  try {
    load_scenario_config(tmp.path() / "bad.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(GroundTruth, InterpolationAndCoverage) {
  GroundTruthSample a, b;
  a.timestamp_ns = 0;
  b.timestamp_ns = 1'000'000'000;
  b.position = Vec3(2, 0, 0);
  b.rotation = so3_exp(Vec3(0, 0, 1.0));
  const GroundTruth gt({a, b});
  const auto mid = gt.interpolate(250'000'000);
  EXPECT_LT((mid.position - Vec3(0.5, 0, 0)).norm(), 1e-12);
  EXPECT_LT((so3_log(mid.rotation) - Vec3(0, 0, 0.25)).norm(), 1e-12);
  EXPECT_THROW(gt.interpolate(-1), Error);
  EXPECT_THROW(gt.interpolate(1'000'000'001), Error);
  EXPECT_THROW(GroundTruth({b, a}), Error);
}

TEST(Euroc, EmptyDirectoryIsMissingFile) {
  TempDir tmp;
  try {
    load_euroc(tmp.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
  EXPECT_THROW(load_euroc(tmp.path() / "absent"), Error);
}

TEST(Euroc, ParsesHandWrittenImu) {
  TempDir tmp;
  const fs::path f = tmp.path() / "imu.csv";
  write_text(f,
             "#timestamp [ns],w_x,w_y,w_z,a_x,a_y,a_z\n"
             "1403636579758555392,-0.099134701513277898,0.14032447270054003,0.02933626319763385,8.1476917083333333,"
             "-0.37592158333333331,-2.4026292499999999\n"
             "1403636579763555584,-0.099134701513277898,0.13892820349822493,0.024448327317886334,8.033280791666666,"
             "-0.40861041666666664,-2.4026292499999999\n"
             "1403636579768555520,-0.098436566912120348,0.12775804988394,0.011882053568060926,7.8861810416666662,"
             "-0.42495483333333334,-2.4353180833333332\n");
  const auto imu = read_imu_csv(f);
  ASSERT_EQ(imu.size(), 3u);
  EXPECT_EQ(imu[0].timestamp_ns, 1403636579758555392);
  EXPECT_EQ(imu[1].angular_velocity.y(), 0.13892820349822493);
  EXPECT_EQ(imu[2].linear_acceleration.x(), 7.8861810416666662);
  EXPECT_EQ(imu[2].linear_acceleration.z(), -2.4353180833333332);
}

TEST(Euroc, MalformedRowReportsLine) {
  TempDir tmp;
  const fs::path f = tmp.path() / "imu.csv";
  write_text(f, "#header\n1,0,0,0,0,0,9.8\n2,0,0,zero,0,0,9.8\n");
  try {
    read_imu_csv(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  write_text(f, "1,0,0,0,0,0,9.8\n2,0,0\n");
  EXPECT_THROW(read_imu_csv(f), Error);
  write_text(f, "2,0,0,0,0,0,9.8\n2,0,0,0,0,0,9.8\n");
  try {
    read_imu_csv(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStream);
  }
}

TEST(Euroc, WriteReloadRoundTrip) {
  TempDir tmp;
  ScenarioConfig c = short_scenario("wave_noisy", 0.5);
  const SyntheticScenario s(c);
  write_euroc(tmp.path(), s);
  const auto loaded = load_euroc(tmp.path());
  EXPECT_EQ(loaded->imu(), s.imu());
  ASSERT_EQ(loaded->frame_count(), s.frame_count());
  EXPECT_TRUE(loaded->has_stereo());
  for (std::size_t i = 0; i < s.frame_count(); i += 4) {
    EXPECT_EQ(loaded->frame_timestamp(i), s.frame_timestamp(i));
    const FrameEvent a = s.frame(i, true), b = loaded->frame(i, true);
    EXPECT_EQ(a.left, b.left);
    ASSERT_TRUE(b.right.has_value());
    EXPECT_EQ(*a.right, *b.right);
  }
  const auto& ga = s.ground_truth().samples();
  const auto& gb = loaded->ground_truth().samples();
  ASSERT_EQ(ga.size(), gb.size());
  for (std::size_t i = 0; i < ga.size(); ++i) {
    EXPECT_EQ(ga[i].position, gb[i].position);
    EXPECT_LT((ga[i].rotation - gb[i].rotation).norm(), 1e-15);
  }
  const StereoCalib& ca = s.calibration();
  const StereoCalib& cb = loaded->calibration();
  EXPECT_DOUBLE_EQ(ca.left.fx, cb.left.fx);
  EXPECT_NEAR(cb.left.baseline, c.baseline, 1e-12);
  EXPECT_DOUBLE_EQ(loaded->imu_noise().accel_noise_density, s.imu_noise().accel_noise_density);

  // Writing the reloaded sequence again reproduces the same streams.
  TempDir again;
  write_euroc(again.path() / "x", *loaded);
  EXPECT_EQ(load_euroc(again.path() / "x")->imu(), s.imu());
}

TEST(Euroc, DefaultCalibration) {
  const StereoCalib c = euroc_default_calibration();
  EXPECT_NEAR(c.left.baseline, 0.110, 2e-3);
  EXPECT_LT(c.left.k1, 0.0);
  EXPECT_TRUE(is_rotation(c.left.body_T_cam.rotation, 1e-9));
}

TEST(ImageIo, PngAndPgmRoundTrip) {
  TempDir tmp;
  Frame f(37, 21);
  for (int y = 0; y < 21; ++y)
    for (int x = 0; x < 37; ++x) f.at(x, y) = static_cast<std::uint8_t>(x * 7 + y * 3);
  save_png(tmp.path() / "a.png", f);
  save_pgm(tmp.path() / "a.pgm", f);
  EXPECT_EQ(load_image(tmp.path() / "a.png"), f);
  EXPECT_EQ(load_image(tmp.path() / "a.pgm"), f);
  EXPECT_THROW(load_image(tmp.path() / "missing.png"), Error);
  write_text(tmp.path() / "bad.pgm", "P2\n1 1\n255\n0\n");
  EXPECT_THROW(load_image(tmp.path() / "bad.pgm"), Error);
}

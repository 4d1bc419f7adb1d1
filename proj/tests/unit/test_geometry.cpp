#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kfvio/core/error.hpp"
#include "kfvio/geometry/camera.hpp"
#include "kfvio/geometry/so3.hpp"
#include "kfvio/geometry/state.hpp"

using namespace kfvio;

namespace {

constexpr double kPi = std::numbers::pi;

// exp(hat(w)) as a truncated power series.
Mat3 series_exp(const Vec3& w, int terms = 20) {
  const Mat3 W = hat(w);
  Mat3 sum = Mat3::Identity(), term = Mat3::Identity();
  for (int k = 1; k < terms; ++k) {
    term = term * W / k;
    sum += term;
  }
  return sum;
}

Vec3 random_axis(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

Vec2 distort_oracle(const CameraCalib& c, double x, double y) {
  const double r2 = x * x + y * y;
  const double radial = 1 + c.k1 * r2 + c.k2 * r2 * r2;
  return {x * radial + 2 * c.p1 * x * y + c.p2 * (r2 + 2 * x * x),
          y * radial + c.p1 * (r2 + 2 * y * y) + 2 * c.p2 * x * y};
}

CameraCalib euroc_like() {
  CameraCalib c;
  c.fx = 458.654;
  c.fy = 457.296;
  c.cx = 367.215;
  c.cy = 248.375;
  c.k1 = -0.28340811;
  c.k2 = 0.07395907;
  c.p1 = 0.00019359;
  c.p2 = 1.76187114e-05;
  return c;
}

KFState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  KFState x;
  x.rotation = so3_exp(Vec3(u(rng), u(rng), u(rng)) * 2.0);
  x.position = Vec3(u(rng), u(rng), u(rng)) * 5;
  x.velocity = Vec3(u(rng), u(rng), u(rng));
  x.gyro_bias = Vec3(u(rng), u(rng), u(rng)) * 0.01;
  x.accel_bias = Vec3(u(rng), u(rng), u(rng)) * 0.1;
  return x;
}

}  // namespace

TEST(So3, ExpOfZeroIsIdentity) { EXPECT_EQ(so3_exp(Vec3::Zero()), Mat3::Identity()); }

TEST(So3, QuarterTurnAboutZ) {
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((so3_exp(Vec3(0, 0, kPi / 2)) - expected).norm(), 1e-15);
  EXPECT_LT((so3_log(expected) - Vec3(0, 0, kPi / 2)).norm(), 1e-15);
  EXPECT_EQ(so3_log(Mat3::Identity()), Vec3::Zero());
}

TEST(So3, ExpMatchesPowerSeries) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  for (int i = 0; i < 500; ++i) {
    const Vec3 w = random_axis(rng) * angle(rng);
    EXPECT_LT((so3_exp(w) - series_exp(w, 30)).norm(), 1e-12) << w.transpose();
  }
}

TEST(So3, SmallAnglesUseSeries) {
  for (double a : {1e-9, 1e-12, 1e-15}) {
    const Vec3 w = Vec3(1, -2, 0.5).normalized() * a;
    EXPECT_LT((so3_exp(w) - series_exp(w)).norm(), 1e-18);
    EXPECT_LT((so3_log(so3_exp(w)) - w).norm(), 1e-20);
  }
}

TEST(So3, ExpLogRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(0.0, kPi - 1e-3);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 w = random_axis(rng) * angle(rng);
    const Rotation R = so3_exp(w);
    EXPECT_TRUE(is_rotation(R, 1e-12));
    EXPECT_LT((so3_log(R) - w).norm(), 1e-10);
    EXPECT_LT((so3_exp(so3_log(R)) - R).norm(), 1e-10);
  }
}

TEST(So3, LogNearPi) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vec3 axis = random_axis(rng);
    const Vec3 w = axis * (kPi - 1e-6);
    const Vec3 got = so3_log(series_exp(w, 40));
    EXPECT_LT((got - w).norm(), 1e-8);
    EXPECT_LE(got.norm(), kPi + 1e-12);
  }
}

TEST(So3, LogAtPiHasNormPi) {
  const Vec3 got = so3_log(so3_exp(Vec3(0, 1, 0) * kPi));
  EXPECT_NEAR(got.norm(), kPi, 1e-12);
  EXPECT_NEAR(std::abs(got.y()), kPi, 1e-12);
}

TEST(So3, Errors) {
  EXPECT_THROW(so3_exp(Vec3(std::nan(""), 0, 0)), Error);
  Mat3 sheared = Mat3::Identity();
  sheared(0, 1) = 0.01;
  EXPECT_THROW(so3_log(sheared), Error);
  EXPECT_THROW(so3_log(-Mat3::Identity()), Error);  // det = -1
}

TEST(So3, RightJacobianFirstOrder) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec3 phi = random_axis(rng) * 1.3;
    const Vec3 d = random_axis(rng) * 1e-6;
    const Rotation lhs = so3_exp(phi + d);
    const Rotation rhs = so3_exp(phi) * so3_exp(so3_right_jacobian(phi) * d);
    EXPECT_LT((lhs - rhs).norm(), 1e-11);
    EXPECT_LT((so3_right_jacobian(phi) * so3_right_jacobian_inverse(phi) - Mat3::Identity()).norm(), 1e-12);
  }
}

TEST(So3, OrthonormalizeAndQuaternions) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 1e-4);
  for (int i = 0; i < 100; ++i) {
    const Rotation R = so3_exp(random_axis(rng) * 2.0);
    Mat3 noisy = R;
    for (int k = 0; k < 9; ++k) noisy(k) += n(rng);
    const Rotation fixed = orthonormalize(noisy);
    EXPECT_TRUE(is_rotation(fixed, 1e-12));
    EXPECT_NEAR(fixed.determinant(), 1.0, 1e-12);
    EXPECT_LT((fixed - R).norm(), 1e-3);
    EXPECT_LT((from_quaternion(to_quaternion(R)) - R).norm(), 1e-14);
  }
}

TEST(State, RetractZeroIsIdentity) {
  std::mt19937_64 rng(1);
  const KFState x = random_state(rng);
  const KFState y = retract(x, Vec15::Zero());
  EXPECT_EQ(y.rotation, x.rotation);
  EXPECT_EQ(y.position, x.position);
  EXPECT_EQ(y.velocity, x.velocity);
  EXPECT_EQ(y.gyro_bias, x.gyro_bias);
  EXPECT_EQ(y.accel_bias, x.accel_bias);
}

TEST(State, RetractQuarterTurnAndPosition) {
  Vec15 d = Vec15::Zero();
  d.segment<3>(state_index::kRot) = Vec3(0, 0, kPi / 2);
  d.segment<3>(state_index::kPos) = Vec3(1, 2, 3);
  const KFState y = retract(KFState{}, d);
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((y.rotation - expected).norm(), 1e-15);
  EXPECT_EQ(y.position, Vec3(1, 2, 3));
}

TEST(State, RetractIsRightPerturbationAndInvertible) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 200; ++i) {
    const KFState x = random_state(rng);
    Vec15 d;
    for (int k = 0; k < 15; ++k) d(k) = u(rng);
    const KFState y = retract(x, d);
    EXPECT_LT((y.rotation - x.rotation * series_exp(d.head<3>())).norm(), 1e-12);
    EXPECT_TRUE(is_rotation(y.rotation, 1e-12));
    // Undo with the compounded inverse: rotation -dtheta on the right, vectors subtracted.
    const KFState back = retract(y, -d);
    EXPECT_LT((back.rotation - x.rotation).norm(), 1e-9);
    EXPECT_LT((back.position - x.position).norm(), 1e-9);
    EXPECT_LT((back.accel_bias - x.accel_bias).norm(), 1e-9);
    EXPECT_LT((state_difference(x, y) - d).norm(), 1e-9);
  }
  EXPECT_THROW(retract(KFState{}, Vec15::Constant(std::nan(""))), Error);
}

TEST(Pose, ComposeAndInvert) {
  std::mt19937_64 rng(4);
  const Pose a{so3_exp(random_axis(rng)), Vec3(1, 2, 3)};
  const Pose b{so3_exp(random_axis(rng) * 0.4), Vec3(-0.5, 0.1, 2)};
  const Vec3 p(0.3, -0.7, 1.1);
  EXPECT_LT(((a * b) * p - a * (b * p)).norm(), 1e-14);
  EXPECT_LT((a.inverse() * (a * p) - p).norm(), 1e-14);
}

TEST(Camera, PinholeExamples) {
  CameraCalib c;
  EXPECT_LT((project(c, Vec3(0, 0, 1)) - Vec2(c.cx, c.cy)).norm(), 1e-12);
  const Vec2 px = project(c, Vec3(1, 0, 1));
  EXPECT_DOUBLE_EQ(px.x(), 825.0);
  EXPECT_DOUBLE_EQ(px.y(), c.cy);
  EXPECT_THROW(project(c, Vec3(0, 0, 0)), Error);
  EXPECT_THROW(project(c, Vec3(0.1, 0, -1)), Error);
}

TEST(Camera, DistortionMatchesPolynomial) {
  const CameraCalib c = euroc_like();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p(u(rng), u(rng) * 0.7, 1.0 + std::abs(u(rng)));
    const Vec2 d = distort_oracle(c, p.x() / p.z(), p.y() / p.z());
    const Vec2 expected(c.fx * d.x() + c.cx, c.fy * d.y() + c.cy);
    EXPECT_LT((project(c, p) - expected).norm(), 1e-9);
  }
}

TEST(Camera, UndistortInvertsDistort) {
  const CameraCalib c = euroc_like();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 200; ++i) {
    const Vec2 n(u(rng), u(rng) * 0.6);
    const Vec2 px = project(c, Vec3(n.x(), n.y(), 1.0));
    EXPECT_LT((undistort_point(c, px) - n).norm(), 1e-9);
  }
}

TEST(Camera, JacobiansMatchFiniteDifferences) {
  const CameraCalib c = euroc_like();
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(u(rng), u(rng), 2.0 + u(rng));
    Eigen::Matrix<double, 2, 3> J;
    project(c, p, &J);
    for (int k = 0; k < 3; ++k) {
      Vec3 dp = Vec3::Zero();
      dp(k) = h;
      const Vec2 fd = (project(c, p + dp) - project(c, p - dp)) / (2 * h);
      EXPECT_LT((fd - J.col(k)).norm(), 1e-5 * std::max(1.0, J.col(k).norm()));
    }
    const Vec2 n(p.x() / p.z(), p.y() / p.z());
    const Eigen::Matrix2d D = distort_jacobian(c, n);
    for (int k = 0; k < 2; ++k) {
      Vec2 dn = Vec2::Zero();
      dn(k) = h;
      const Vec2 fd = (distort(c, n + dn) - distort(c, n - dn)) / (2 * h);
      EXPECT_LT((fd - D.col(k)).norm(), 1e-7);
    }
  }
}

TEST(Camera, Validation) {
  CameraCalib c;
  EXPECT_NO_THROW(validate(c));
  EXPECT_THROW(validate(c, true), Error);  // stereo needs a baseline
  c.baseline = 0.11;
  EXPECT_NO_THROW(validate(c, true));
  c.fx = 0;
  EXPECT_THROW(validate(c), Error);
}

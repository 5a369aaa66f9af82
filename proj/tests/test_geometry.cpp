#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bevstream/error.hpp"
#include "bevstream/geometry.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace bevstream;
using bevstream::testing::random_pose;

namespace {

constexpr double kPi = std::numbers::pi;

void expect_pose_near(const Pose2& a, const Pose2& b, double tol = 1e-9) {
  EXPECT_NEAR(a.x(), b.x(), tol);
  EXPECT_NEAR(a.y(), b.y(), tol);
  // compare angles on the circle
  EXPECT_NEAR(normalize_angle(a.yaw() - b.yaw()), 0.0, tol);
}

void expect_transform_near(const GridTransform& a, const GridTransform& b, double tol = 1e-9) {
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(a.m[i], b.m[i], tol) << "element " << i;
}

}  // namespace

TEST(Pose2, YawIsNormalizedIntoHalfOpenRange) {
  EXPECT_DOUBLE_EQ(Pose2(0, 0, -kPi).yaw(), kPi);
  EXPECT_DOUBLE_EQ(Pose2(0, 0, kPi).yaw(), kPi);
  EXPECT_NEAR(Pose2(0, 0, 3 * kPi / 2).yaw(), -kPi / 2, 1e-15);
  EXPECT_NEAR(Pose2(0, 0, 7.0).yaw(), 7.0 - 2 * kPi, 1e-15);
}

TEST(Pose2, ComposeExamples) {
  const Pose2 p(1.5, -2.0, 0.3);
  expect_pose_near(pose_compose(Pose2::identity(), p), p, 0.0);
  expect_pose_near(pose_compose(Pose2(1, 0, 0), Pose2(2, 0, 0)), Pose2(3, 0, 0), 0.0);
  expect_pose_near(pose_compose(Pose2(0, 0, kPi / 2), Pose2(1, 0, 0)), Pose2(0, 1, kPi / 2), 1e-15);
}

TEST(Pose2, InverseExamples) {
  expect_pose_near(pose_inverse(Pose2::identity()), Pose2::identity(), 0.0);
  expect_pose_near(pose_inverse(Pose2(3, 0, 0)), Pose2(-3, 0, 0), 0.0);
  expect_pose_near(pose_inverse(Pose2(1, 2, kPi / 2)), Pose2(-2, 1, -kPi / 2), 1e-15);
}

TEST(Pose2, GroupLawsOnRandomPoses) {
  Rng rng(11);
  for (int n = 0; n < 1000; ++n) {
    const Pose2 a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    expect_pose_near(pose_compose(pose_compose(a, b), c), pose_compose(a, pose_compose(b, c)));
    expect_pose_near(pose_compose(a, pose_inverse(a)), Pose2::identity());
    expect_pose_near(pose_compose(pose_inverse(a), a), Pose2::identity());
    expect_pose_near(pose_compose(Pose2::identity(), a), a);
    // against homogeneous matrices
    const auto m = oracle::matmul(oracle::pose_matrix(a), oracle::pose_matrix(b));
    const Pose2 ab = pose_compose(a, b);
    EXPECT_NEAR(ab.x(), m[0][2], 1e-9);
    EXPECT_NEAR(ab.y(), m[1][2], 1e-9);
    EXPECT_NEAR(normalize_angle(ab.yaw() - std::atan2(m[1][0], m[0][0])), 0.0, 1e-9);
  }
}

TEST(GridGeometry, RejectsNonPositiveResolution) {
  GridGeometry g{16, 16, 0.0};
  try {
    relative_transform(Pose2(), Pose2(1, 0, 0), g);
    FAIL() << "expected invalid geometry";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidGeometry);
  }
  g.resolution = -0.8;
  EXPECT_THROW(g.validate(), Error);
}

TEST(RelativeTransform, EqualPosesGiveIdentity) {
  const GridGeometry g{32, 32, 0.8};
  const Pose2 p(4.2, -1.0, 0.7);
  EXPECT_TRUE(relative_transform(p, p, g).is_identity());
}

TEST(RelativeTransform, OneCellForwardIsUnitTranslation) {
  const GridGeometry g{32, 32, 0.8};
  // ego moved +1 cell along x: a world point now appears one cell further
  // -x, so destination cell c samples source cell c + 1.
  const auto t = relative_transform(Pose2(0.8, 0, 0), Pose2(0, 0, 0), g);
  ASSERT_TRUE(t.is_integer_translation());
  EXPECT_EQ(t.integer_offset()[0], 1);
  EXPECT_EQ(t.integer_offset()[1], 0);
}

TEST(RelativeTransform, QuarterTurnRotatesAboutEgoCell) {
  const GridGeometry g{33, 33, 0.5};  // ego centre at cell (16, 16)
  const auto t = relative_transform(Pose2(0, 0, kPi / 2), Pose2(0, 0, 0), g);
  const auto centre = t.apply(16, 16);
  EXPECT_NEAR(centre[0], 16, 1e-12);
  EXPECT_NEAR(centre[1], 16, 1e-12);
  // destination cell one step along ego +x is world +y (dst yaw = 90 deg),
  // which the source (yaw 0) renders one row down.
  const auto east = t.apply(17, 16);
  EXPECT_NEAR(east[0], 16, 1e-12);
  EXPECT_NEAR(east[1], 17, 1e-12);
  const auto south = t.apply(16, 17);
  EXPECT_NEAR(south[0], 15, 1e-12);
  EXPECT_NEAR(south[1], 16, 1e-12);
}

TEST(RelativeTransform, MatchesWorldRoundTripOracle) {
  const GridGeometry g{40, 24, 0.8};
  Rng rng(3);
  std::uniform_real_distribution<double> cell(0.0, 40.0);
  for (int n = 0; n < 200; ++n) {
    const Pose2 dst = random_pose(rng), src = random_pose(rng);
    const auto t = relative_transform(dst, src, g);
    const double col = cell(rng), row = cell(rng);
    const auto got = t.apply(col, row);
    const auto want = oracle::dst_cell_to_src_cell(dst, src, g, col, row);
    EXPECT_NEAR(got[0], want[0], 1e-9);
    EXPECT_NEAR(got[1], want[1], 1e-9);
  }
}

TEST(RelativeTransform, ComposesAlongPoseChains) {
  const GridGeometry g{128, 128, 0.8};
  Rng rng(5);
  for (int n = 0; n < 1000; ++n) {
    const Pose2 a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    expect_transform_near(compose(relative_transform(a, b, g), relative_transform(b, c, g)),
                          relative_transform(a, c, g));
  }
}

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "advscen/geometry.hpp"
#include "advscen/random.hpp"
#include "oracles.hpp"

namespace advscen {
namespace {

oracle::Quad quad_of(const OrientedRect& r) {
  oracle::Quad q;
  const auto c = r.corners();
  for (int i = 0; i < 4; ++i) q[i] = {c[i].x, c[i].y};
  return q;
}

OrientedRect random_rect(Rng& rng) {
  return {{uniform(rng, -6, 6), uniform(rng, -4, 4)}, 2.5, 1.0, uniform(rng, -std::numbers::pi, std::numbers::pi)};
}

TEST(Geometry, CornersAreCounterClockwiseFromFrontLeft) {
  const OrientedRect r{{1, 2}, 2.5, 1.0, 0.0};
  const auto c = r.corners();
  EXPECT_DOUBLE_EQ(c[0].x, 3.5);
  EXPECT_DOUBLE_EQ(c[0].y, 3.0);
  EXPECT_DOUBLE_EQ(c[1].x, -1.5);
  EXPECT_DOUBLE_EQ(c[2].y, 1.0);
}

TEST(Geometry, FootprintAreaMatchesShoelace) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const OrientedRect r = footprint({uniform(rng, 0, 100), uniform(rng, 0, 10), 20, uniform(rng, -3, 3)}, {});
    EXPECT_NEAR(oracle::shoelace(quad_of(r)), 10.0, 1e-9);
  }
}

TEST(Geometry, TouchingCountsAsOverlap) {
  const OrientedRect a{{0, 0}, 2.5, 1.0, 0.0};
  const OrientedRect b{{5, 0}, 2.5, 1.0, 0.0};
  EXPECT_TRUE(rect_overlap(a, b));
  EXPECT_DOUBLE_EQ(rect_min_distance(a, b), 0.0);
}

TEST(Geometry, AxisAlignedGap) {
  const OrientedRect a{{0, 0}, 2.5, 1.0, 0.0};
  const OrientedRect b{{20, 0}, 2.5, 1.0, 0.0};
  EXPECT_FALSE(rect_overlap(a, b));
  EXPECT_DOUBLE_EQ(rect_min_distance(a, b), 15.0);
  const OrientedRect c{{0, 5}, 2.5, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(rect_min_distance(a, c), 3.0);
}

TEST(Geometry, CrossedRectanglesOverlapWithoutContainedCorners) {
  const OrientedRect a{{0, 0}, 2.5, 1.0, 0.0};
  const OrientedRect b{{0, 0}, 2.5, 1.0, std::numbers::pi / 2};
  EXPECT_TRUE(rect_overlap(a, b));
}

TEST(Geometry, OverlapAgreesWithPointSampling) {
  Rng rng(11);
  int compared = 0;
  for (int i = 0; i < 300; ++i) {
    const OrientedRect a = random_rect(rng), b = random_rect(rng);
    const double d = oracle::boundary_distance(quad_of(a), quad_of(b), 200);
    const bool sampled = oracle::sampled_overlap(a.center.x, a.center.y, 5, 2, a.angle, quad_of(b), 80) ||
                         oracle::sampled_overlap(b.center.x, b.center.y, 5, 2, b.angle, quad_of(a), 80);
    // A sample point inside is conclusive; a miss is not when the boundaries nearly touch.
    if (!sampled && d < 1e-2) continue;
    EXPECT_EQ(rect_overlap(a, b), sampled) << "pair " << i;
    ++compared;
  }
  EXPECT_GT(compared, 250);
}

TEST(Geometry, DistanceMatchesBoundaryDiscretisation) {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    OrientedRect a = random_rect(rng), b = random_rect(rng);
    b.center.x += 8;
    if (rect_overlap(a, b)) continue;
    EXPECT_NEAR(rect_min_distance(a, b), oracle::boundary_distance(quad_of(a), quad_of(b), 500), 1e-3);
  }
}

TEST(Geometry, SegmentDistance) {
  EXPECT_DOUBLE_EQ(segment_distance({0, 0}, {1, 0}, {0, 1}, {1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(segment_distance({0, 0}, {2, 2}, {0, 2}, {2, 0}), 0.0);
  EXPECT_DOUBLE_EQ(segment_distance({0, 0}, {1, 0}, {4, 4}, {4, 4}), 5.0);
}

}  // namespace
}  // namespace advscen

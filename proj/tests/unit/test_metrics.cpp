#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "advscen/errors.hpp"
#include "advscen/metrics.hpp"
#include "advscen/policies.hpp"
#include "oracles.hpp"

namespace advscen {
namespace {

const EnvConfig kCfg{};

EpisodeLog ep(Event outcome, double duration, double distance) {
  EpisodeLog e;
  e.outcome = outcome;
  e.duration = duration;
  e.steps = std::lround(duration / kCfg.dt);
  e.av_distance = distance;
  return e;
}

TEST(Metrics, HandBuiltCollisionRateAndPerSecond) {
  std::vector<EpisodeLog> logs;
  for (int i = 0; i < 10; ++i) logs.push_back(ep(i < 3 ? Event::av_collision : Event::horizon, 0.6, 10.0));
  const auto m = compute_metrics(logs);
  EXPECT_DOUBLE_EQ(m.cr, 30.0);
  EXPECT_DOUBLE_EQ(m.cps, 0.5);
  EXPECT_EQ(m.n_collisions, 3u);
  EXPECT_EQ(m.n_episodes, 10u);
}

TEST(Metrics, PerMetreAndPer100m) {
  const std::vector<EpisodeLog> logs{ep(Event::av_collision, 1.0, 400.0),
                                     ep(Event::av_collision, 1.0, 100.0),
                                     ep(Event::horizon, 4.0, 500.0)};
  const auto m = compute_metrics(logs);
  EXPECT_DOUBLE_EQ(m.cpm_per_m, 0.002);
  EXPECT_DOUBLE_EQ(m.cpm_per_100m, 0.2);
}

TEST(Metrics, CollisionOnlyMeans) {
  const std::vector<EpisodeLog> logs{ep(Event::av_collision, 0.5, 10.0), ep(Event::av_collision, 1.0, 30.0),
                                     ep(Event::horizon, 4.0, 100.0), ep(Event::bv_collision, 2.0, 50.0)};
  const auto m = compute_metrics(logs);
  ASSERT_TRUE(m.act && m.acd);
  EXPECT_DOUBLE_EQ(*m.act, 0.75);
  EXPECT_DOUBLE_EQ(*m.acd, 20.0);
}

TEST(Metrics, NoCollisions) {
  const auto m = compute_metrics({ep(Event::horizon, 4.0, 100.0)});
  EXPECT_FALSE(m.act.has_value());
  EXPECT_FALSE(m.acd.has_value());
  EXPECT_EQ(m.cps, 0.0);
  EXPECT_EQ(m.cpm_per_m, 0.0);
  EXPECT_THROW(compute_metrics({}), StructuralError);
}

TEST(Metrics, IdentitiesOverRandomLogs) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EpisodeLog> logs;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      const bool hit = rng() % 3 == 0;
      logs.push_back(ep(hit ? Event::av_collision : Event::horizon, uniform(rng, 0.04, 4.0), uniform(rng, 1, 160)));
    }
    const auto m = compute_metrics(logs);
    EXPECT_EQ(m.cpm_per_100m, 100.0 * m.cpm_per_m);
    EXPECT_GE(m.cr, 0.0);
    EXPECT_LE(m.cr, 100.0);
    std::shuffle(logs.begin(), logs.end(), rng);
    const auto r = compute_metrics(logs);
    EXPECT_DOUBLE_EQ(r.cr, m.cr);
    EXPECT_NEAR(r.cps, m.cps, 1e-12 * std::max(1.0, m.cps));
    EXPECT_NEAR(r.cpm_per_m, m.cpm_per_m, 1e-12);
  }
}

TEST(Metrics, DroppingSafeEpisodesRaisesRatesOnly) {
  std::vector<EpisodeLog> logs{ep(Event::av_collision, 1.0, 20.0), ep(Event::horizon, 4.0, 100.0),
                               ep(Event::av_collision, 2.0, 40.0)};
  const auto all = compute_metrics(logs);
  logs.erase(logs.begin() + 1);
  const auto hits = compute_metrics(logs);
  EXPECT_DOUBLE_EQ(*hits.act, *all.act);
  EXPECT_DOUBLE_EQ(*hits.acd, *all.acd);
  EXPECT_GT(hits.cps, all.cps);
  EXPECT_GT(hits.cpm_per_m, all.cpm_per_m);
}

// Brakes every BV as hard as allowed.
class BrakeBvs final : public BvController {
 public:
  std::vector<VehicleAction> act(const Scene& s, Rng&) override {
    return std::vector<VehicleAction>(s.bvs.size(), {-1.0, 0.0});
  }
};

TEST(Evaluation, StoppedCarAheadAlwaysHit) {
  Scene s;
  s.av = {200, kCfg.road.lane_center(1), 25, 0};
  s.bvs = {{225.5, kCfg.road.lane_center(1), 0.0, 0}};
  s.bv_actions = {{}};
  PolicySpec spec;
  auto av = make_av_controller(spec, kCfg);
  BrakeBvs bv;
  const auto logs = run_evaluation(*av, bv, 20, kCfg, PoolInit{{s}}, 1, true);
  ASSERT_EQ(logs.size(), 20u);
  for (const auto& l : logs) {
    EXPECT_EQ(l.outcome, Event::av_collision);
    // bumper gap 20.5 m closed at 1 m per frame
    EXPECT_EQ(l.steps, 21);
    EXPECT_NEAR(l.duration, 21 * kCfg.dt, 1e-12);
    EXPECT_NEAR(l.av_distance, 21 * kCfg.dt * 25, 1e-9);
    ASSERT_TRUE(l.scenario.has_value());
    EXPECT_EQ(l.scenario->frames.size(), 22u);
    EXPECT_TRUE(validate_scenario(*l.scenario).empty());
  }
  EXPECT_DOUBLE_EQ(compute_metrics(logs).cr, 100.0);
}

TEST(Evaluation, DeterministicPerSeedAndEmptyForZero) {
  PolicySpec av_spec, bv_spec;
  bv_spec.kind = PolicyKind::dr_bv;
  auto av = make_av_controller(av_spec, kCfg);
  auto bv = make_bv_controller(bv_spec, kCfg);
  SyntheticInit init;
  EXPECT_TRUE(run_evaluation(*av, *bv, 0, kCfg, init, 1).empty());
  const auto a = run_evaluation(*av, *bv, 15, kCfg, init, 4);
  const auto b = run_evaluation(*av, *bv, 15, kCfg, init, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].outcome, b[i].outcome);
    EXPECT_EQ(a[i].av_distance, b[i].av_distance);
    EXPECT_EQ(a[i].seed, b[i].seed);
  }
  // Episode i does not depend on how many run before it.
  const auto tail = run_evaluation(*av, *bv, 15, kCfg, init, 4);
  EXPECT_EQ(tail[14].av_distance, a[14].av_distance);
}

TEST(Histogram, BinsAndCsvRoundTrip) {
  Histogram h = make_histogram(linear_edges(0, 10, 5));
  ASSERT_EQ(h.edges.size(), 6u);
  EXPECT_DOUBLE_EQ(h.edges[3], 6.0);
  EXPECT_EQ(h.bin_of(-3), 0u);
  EXPECT_EQ(h.bin_of(2.0), 1u);
  EXPECT_EQ(h.bin_of(99), 4u);
  h.values = {1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(h.total(), 15.0);
  std::stringstream ss;
  write_histogram_csv(h, ss);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "bin_left,bin_right,value");
  const Histogram back = read_histogram_csv(ss);
  EXPECT_EQ(back.edges, h.edges);
  EXPECT_EQ(back.values, h.values);
}

Scenario one_frame(const std::vector<VehicleState>& bvs, const VehicleState& av) {
  Scenario sc;
  Scene s;
  s.av = av;
  s.bvs = bvs;
  s.bv_actions.assign(bvs.size(), {});
  sc.frames.push_back(s);
  return sc;
}

TEST(Gaps, FollowingDistanceIsBumperGap) {
  const double lane = kCfg.road.lane_center(1);
  const auto sc = one_frame({{220, lane, 25, 0}}, {200, lane, 25, 0});
  const auto g = gap_distributions({sc}, linear_edges(0, 100, 20), linear_edges(-12, 12, 24), kCfg);
  EXPECT_EQ(g.following_samples, 1u);
  EXPECT_DOUBLE_EQ(g.following.values[g.following.bin_of(15.0)], 1.0);
  EXPECT_EQ(g.lateral_samples, 0u);
}

TEST(Gaps, ParallelCarsLateralMassAtPlusMinus) {
  const auto sc = one_frame({{200, 8.0, 25, 0}}, {200, 5.0, 25, 0});
  const auto g = gap_distributions({sc}, linear_edges(0, 100, 20), linear_edges(-12, 12, 24), kCfg);
  EXPECT_EQ(g.lateral_samples, 2u);
  EXPECT_DOUBLE_EQ(g.lateral.values[g.lateral.bin_of(3.0)], 0.5);
  EXPECT_DOUBLE_EQ(g.lateral.values[g.lateral.bin_of(-3.0 + 1e-9)], 0.5);
}

TEST(CollisionDistance, PointMassAndFrequencySumIsCpm) {
  std::vector<EpisodeLog> logs{ep(Event::av_collision, 0.4, 10.0), ep(Event::av_collision, 0.4, 10.0),
                               ep(Event::horizon, 4.0, 100.0)};
  const auto edges = linear_edges(0, 120, 12);
  auto cd = collision_distance_distribution(logs, edges);
  EXPECT_DOUBLE_EQ(cd.probability.values[1], 1.0);
  EXPECT_DOUBLE_EQ(cd.probability.total(), 1.0);
  EXPECT_NEAR(cd.frequency.total(), compute_metrics(logs).cpm_per_m, 1e-15);

  // Same shape, more safe distance: frequency scales, probability does not.
  logs.push_back(ep(Event::horizon, 4.0, 120.0));
  const auto more = collision_distance_distribution(logs, edges);
  EXPECT_EQ(more.probability.values, cd.probability.values);
  EXPECT_NEAR(more.frequency.values[1] / cd.frequency.values[1], 120.0 / 240.0, 1e-12);
}

TEST(Smoothing, Recurrence) {
  const auto s = exponential_smoothing({1, 2, 3}, 0.5);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 1.5);
  EXPECT_DOUBLE_EQ(s[2], 2.25);
}

TEST(Pca, TwoDimensionalInputIsRotation) {
  Rng rng(2);
  Eigen::MatrixXd x(30, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -3, 3);
  x.col(1) *= 0.3;
  const auto p = pca_project(x, Eigen::VectorXd::Zero(30));
  EXPECT_NEAR(p.explained, 1.0, 1e-12);
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 30; ++j) {
      EXPECT_NEAR((p.points.row(i) - p.points.row(j)).norm(), (c.row(i) - c.row(j)).norm(), 1e-10);
    }
  }
}

TEST(Pca, CollinearPointsHaveZeroSecondVariance) {
  Eigen::MatrixXd x(10, 3);
  for (int i = 0; i < 10; ++i) x.row(i) << i, 2.0 * i, -1.0 * i;
  const auto p = pca_project(x, Eigen::VectorXd::Zero(10));
  EXPECT_NEAR(p.variances(1), 0.0, 1e-12);
  EXPECT_NEAR(p.points.col(1).norm(), 0.0, 1e-9);
}

TEST(Pca, MatchesJacobiEigensolver) {
  Rng rng(8);
  Eigen::MatrixXd x(200, 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1, 1);
  for (int k = 0; k < 8; ++k) x.col(k) *= 1.0 + k;
  Eigen::VectorXd q = Eigen::VectorXd::LinSpaced(200, 0, 1);
  const auto p = pca_project(x, q);
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = c.transpose() * c / 199.0;
  const auto ref = oracle::jacobi_eigen(cov);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd v = ref.vectors.col(k);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    EXPECT_LT((p.components.col(k) - v).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(p.variances(k), ref.values(k), 1e-8 * ref.values(0));
  }
  EXPECT_NEAR(p.explained, (ref.values(0) + ref.values(1)) / ref.values.sum(), 1e-10);
  EXPECT_EQ(p.weights, q);
}

}  // namespace
}  // namespace advscen

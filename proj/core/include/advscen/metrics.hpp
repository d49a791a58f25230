#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "advscen/scenario.hpp"
#include "advscen/traffic_sim.hpp"

namespace advscen {

struct EpisodeLog {
  Event outcome = Event::horizon;
  long steps = 0;             ///< frames advanced before the episode ended
  double duration = 0.0;      ///< s, steps·dt
  double av_distance = 0.0;   ///< m, AV path length
  double av_reward = 0.0;     ///< sum of per-step AV rewards
  double av_mean_speed = 0.0; ///< m/s, averaged over the visited frames
  std::uint64_t seed = 0;
  std::optional<Scenario> scenario;
};

/// Runs n independent episodes; episode i is seeded with derive_seed(seed, i)
/// so results do not depend on how many episodes precede it.
std::vector<EpisodeLog> run_evaluation(AvController& av, BvController& bv, std::size_t n,
                                       const EnvConfig& cfg, const InitSource& init,
                                       std::uint64_t seed, bool record_scenarios = false);

struct MetricsReport {
  double cr = 0.0;                 ///< percent of episodes ending in an AV collision
  std::optional<double> act;       ///< s, mean duration of collision episodes
  std::optional<double> acd;       ///< m, mean AV distance of collision episodes
  double cps = 0.0;                ///< collisions per second of exposure
  double cpm_per_m = 0.0;          ///< collisions per metre of AV travel
  double cpm_per_100m = 0.0;
  std::size_t n_episodes = 0;
  std::size_t n_collisions = 0;
  double av_avg_reward = 0.0;      ///< mean per-step AV reward
  double av_avg_speed = 0.0;       ///< m/s
};

/// Throws StructuralError on an empty log list.
MetricsReport compute_metrics(const std::vector<EpisodeLog>& logs);

/// Fixed-edge histogram; values.size() == edges.size() - 1.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> values;

  /// Bin of x; values outside the range fall into the end bins.
  std::size_t bin_of(double x) const;
  double total() const;
};
Histogram make_histogram(std::vector<double> edges);
/// Evenly spaced edges lo, lo+w, ..., hi.
std::vector<double> linear_edges(double lo, double hi, std::size_t bins);

/// CSV with columns bin_left, bin_right, value.
void write_histogram_csv(const Histogram& h, std::ostream& out);
Histogram read_histogram_csv(std::istream& in);

struct GapDistributions {
  Histogram following;  ///< bumper gap to the nearest same-lane leader, probability mass
  Histogram lateral;    ///< signed lateral offset to the nearest longitudinally overlapping car
  std::size_t following_samples = 0;
  std::size_t lateral_samples = 0;
};
GapDistributions gap_distributions(const std::vector<Scenario>& scenarios,
                                   const std::vector<double>& following_edges,
                                   const std::vector<double>& lateral_edges, const EnvConfig& cfg);

struct CollisionDistance {
  Histogram probability;  ///< share of collision episodes per distance bin
  Histogram frequency;    ///< collisions per bin divided by total AV distance
};
/// Bins collision episodes by AV distance travelled before the collision.
CollisionDistance collision_distance_distribution(const std::vector<EpisodeLog>& logs,
                                                  const std::vector<double>& edges);

/// s_0 = x_0, s_t = c·s_{t-1} + (1 - c)·x_t.
std::vector<double> exponential_smoothing(const std::vector<double>& x, double c = 0.99);

struct PcaResult {
  Eigen::MatrixXd points;      ///< n x 2
  Eigen::MatrixXd components;  ///< d x 2, unit columns (zero when unavailable)
  Eigen::Vector2d variances;   ///< sample variances along the components
  double explained = 0.0;      ///< share of total variance kept by the two components
  Eigen::VectorXd weights;     ///< per-point q values, passed through
};
/// Rows of `samples` are observations. Components are the leading eigenvectors of
/// the sample covariance, signed so the largest-magnitude entry is positive.
PcaResult pca_project(const Eigen::MatrixXd& samples, const Eigen::VectorXd& q_values);

}  // namespace advscen

#include "advscen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "advscen/errors.hpp"
#include "advscen/policies.hpp"

namespace advscen {

std::vector<EpisodeLog> run_evaluation(AvController& av, BvController& bv, std::size_t n,
                                       const EnvConfig& cfg, const InitSource& init,
                                       std::uint64_t seed, bool record_scenarios) {
  std::vector<EpisodeLog> logs;
  logs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    EpisodeLog log;
    log.seed = derive_seed(seed, i);
    Rng rng(log.seed);
    Scene scene = env_reset(cfg, init, rng);
    av.reset(scene, rng);
    bv.reset(scene, rng);
    Scenario sc;
    sc.dt = cfg.dt;
    while (true) {
      const StepOutcome out = env_step(scene, bv.act(scene, rng), av, cfg, rng);
      log.av_distance += scene.av.v * cfg.dt;
      log.av_reward += out.av_reward;
      ++log.steps;
      if (record_scenarios) {
        scene.av_action = out.av_action;
        scene.bv_actions = out.bv_actions;
        sc.frames.push_back(scene);
      }
      scene = out.next_scene;
      if (out.terminal()) {
        log.outcome = out.event;
        break;
      }
    }
    log.duration = static_cast<double>(log.steps) * cfg.dt;
    log.av_mean_speed = log.av_distance / log.duration;
    if (record_scenarios) {
      sc.frames.push_back(scene);
      sc.outcome = log.outcome;
      log.scenario = std::move(sc);
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

MetricsReport compute_metrics(const std::vector<EpisodeLog>& logs) {
  if (logs.empty()) throw StructuralError("compute_metrics needs at least one episode");
  MetricsReport r;
  r.n_episodes = logs.size();
  double total_time = 0.0, total_dist = 0.0, col_time = 0.0, col_dist = 0.0;
  double reward = 0.0, steps = 0.0;
  for (const auto& l : logs) {
    total_time += l.duration;
    total_dist += l.av_distance;
    reward += l.av_reward;
    steps += static_cast<double>(l.steps);
    if (l.outcome == Event::av_collision) {
      ++r.n_collisions;
      col_time += l.duration;
      col_dist += l.av_distance;
    }
  }
  const auto n_col = static_cast<double>(r.n_collisions);
  r.cr = 100.0 * n_col / static_cast<double>(r.n_episodes);
  if (r.n_collisions > 0) {
    r.act = col_time / n_col;
    r.acd = col_dist / n_col;
  }
  r.cps = r.n_collisions > 0 ? n_col / total_time : 0.0;
  r.cpm_per_m = r.n_collisions > 0 ? n_col / total_dist : 0.0;
  r.cpm_per_100m = 100.0 * r.cpm_per_m;
  r.av_avg_reward = steps > 0 ? reward / steps : 0.0;
  r.av_avg_speed = total_time > 0 ? total_dist / total_time : 0.0;
  return r;
}

// --- histograms ------------------------------------------------------------------

std::size_t Histogram::bin_of(double x) const {
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const auto idx = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(values.size()) - 1));
}

double Histogram::total() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

Histogram make_histogram(std::vector<double> edges) {
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ConfigError("histogram edges must be strictly increasing with at least two entries");
  }
  Histogram h;
  h.values.assign(edges.size() - 1, 0.0);
  h.edges = std::move(edges);
  return h;
}

std::vector<double> linear_edges(double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw ConfigError("linear_edges needs hi > lo and bins > 0");
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  return e;
}

void write_histogram_csv(const Histogram& h, std::ostream& out) {
  out << "bin_left,bin_right,value\n";
  char buf[96];
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", h.edges[i], h.edges[i + 1], h.values[i]);
    out << buf;
  }
}

Histogram read_histogram_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line.rfind("bin_left,bin_right,value", 0) != 0) {
    throw ParseError("missing histogram header", 1);
  }
  std::vector<double> edges, values;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double l = 0, r = 0, v = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(line);
    if (!(ss >> l >> c1 >> r >> c2 >> v) || c1 != ',' || c2 != ',') {
      throw ParseError("malformed histogram row", lineno);
    }
    if (edges.empty()) edges.push_back(l);
    if (l != edges.back()) throw ParseError("histogram bins are not contiguous", lineno);
    edges.push_back(r);
    values.push_back(v);
  }
  Histogram h = make_histogram(std::move(edges));
  h.values = std::move(values);
  return h;
}

GapDistributions gap_distributions(const std::vector<Scenario>& scenarios,
                                   const std::vector<double>& following_edges,
                                   const std::vector<double>& lateral_edges, const EnvConfig& cfg) {
  if (scenarios.empty()) throw StructuralError("gap_distributions needs at least one scenario");
  GapDistributions g;
  g.following = make_histogram(following_edges);
  g.lateral = make_histogram(lateral_edges);
  const double len = cfg.dims.length;
  for (const auto& sc : scenarios) {
    for (const auto& scene : sc.frames) {
      const std::size_t n = vehicle_count(scene);
      for (std::size_t k = 0; k < n; ++k) {
        const VehicleState& me = vehicle(scene, k);
        if (const auto lead = lane_leader(scene, k, cfg.road.lane_of(me.y), cfg)) {
          g.following.values[g.following.bin_of(lead->gap)] += 1.0;
          ++g.following_samples;
        }
        double best = std::numeric_limits<double>::infinity();
        double offset = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == k) continue;
          const VehicleState& o = vehicle(scene, j);
          if (std::abs(o.x - me.x) >= len) continue;
          const double dy = o.y - me.y;
          if (std::abs(dy) < best) {
            best = std::abs(dy);
            offset = dy;
          }
        }
        if (std::isfinite(best)) {
          g.lateral.values[g.lateral.bin_of(offset)] += 1.0;
          ++g.lateral_samples;
        }
      }
    }
  }
  if (g.following_samples > 0) {
    for (double& v : g.following.values) v /= static_cast<double>(g.following_samples);
  }
  if (g.lateral_samples > 0) {
    for (double& v : g.lateral.values) v /= static_cast<double>(g.lateral_samples);
  }
  return g;
}

CollisionDistance collision_distance_distribution(const std::vector<EpisodeLog>& logs,
                                                  const std::vector<double>& edges) {
  if (logs.empty()) throw StructuralError("collision_distance_distribution needs episodes");
  CollisionDistance out;
  out.probability = make_histogram(edges);
  out.frequency = make_histogram(edges);
  std::vector<double> counts(out.probability.values.size(), 0.0);
  double n_col = 0.0, total_dist = 0.0;
  for (const auto& l : logs) {
    total_dist += l.av_distance;
    if (l.outcome != Event::av_collision) continue;
    counts[out.probability.bin_of(l.av_distance)] += 1.0;
    n_col += 1.0;
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.probability.values[i] = n_col > 0 ? counts[i] / n_col : 0.0;
    out.frequency.values[i] = n_col > 0 ? counts[i] / total_dist : 0.0;
  }
  return out;
}

std::vector<double> exponential_smoothing(const std::vector<double>& x, double c) {
  if (!(c >= 0.0 && c < 1.0)) throw ConfigError("smoothing coefficient must lie in [0, 1)");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = i == 0 ? x[0] : c * out[i - 1] + (1.0 - c) * x[i];
  return out;
}

PcaResult pca_project(const Eigen::MatrixXd& samples, const Eigen::VectorXd& q_values) {
  if (samples.rows() < 2 || samples.cols() < 2) {
    throw StructuralError("pca_project needs at least two samples of dimension two");
  }
  if (q_values.size() != 0 && q_values.size() != samples.rows()) {
    throw StructuralError("pca_project: one q value per sample required");
  }
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);  // ascending
  const Eigen::Index d = cov.rows();
  const double total = lambda.sum();
  const double tiny = 1e-12 * std::max(total, 1e-300);

  PcaResult r;
  r.components = Eigen::MatrixXd::Zero(d, 2);
  r.variances.setZero();
  for (int c = 0; c < 2; ++c) {
    const Eigen::Index idx = d - 1 - c;
    if (lambda(idx) <= tiny) continue;
    Eigen::VectorXd v = eig.eigenvectors().col(idx);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    r.components.col(c) = v;
    r.variances(c) = lambda(idx);
  }
  r.points = centered * r.components;
  r.explained = total > 0 ? r.variances.sum() / total : 0.0;
  r.weights = q_values;
  return r;
}

}  // namespace advscen

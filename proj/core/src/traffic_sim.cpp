#include "advscen/traffic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advscen/errors.hpp"

namespace advscen {

int RoadConfig::lane_of(double y) const {
  const int lane = static_cast<int>(std::floor(y / lane_width));
  return std::clamp(lane, 0, lane_count - 1);
}

void validate(const EnvConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ConfigError("env.dt must be positive");
  if (cfg.horizon < 1) throw ConfigError("env.horizon must be at least 1");
  if (!(cfg.reward_bonus > 0.0)) throw ConfigError("env.reward_bonus must be positive");
  if (!(cfg.v_max > 0.0)) throw ConfigError("env.v_max must be positive");
  if (!(cfg.accel_min < 0.0 && cfg.accel_max > 0.0)) {
    throw ConfigError("env acceleration bounds must straddle zero");
  }
  if (!(cfg.dtheta_rate > 0.0)) throw ConfigError("env.dtheta_rate must be positive");
  if (!(cfg.dims.length > 0.0 && cfg.dims.width > 0.0)) {
    throw ConfigError("vehicle dimensions must be positive");
  }
  if (cfg.road.lane_count < 2) throw ConfigError("road.lane_count must be at least 2");
  if (!(cfg.road.lane_width > cfg.dims.width)) {
    throw ConfigError("road.lane_width must exceed the vehicle width");
  }
}

ActionLimits action_limits(const EnvConfig& cfg) {
  return {cfg.accel_min * cfg.dt, cfg.accel_max * cfg.dt, -cfg.dtheta_rate * cfg.dt,
          cfg.dtheta_rate * cfg.dt};
}

VehicleAction clamp_action(const VehicleAction& a, const ActionLimits& lim) {
  return {std::clamp(a.dv, lim.dv_min, lim.dv_max),
          std::clamp(a.dtheta, lim.dtheta_min, lim.dtheta_max)};
}

bool within_limits(const VehicleAction& a, const ActionLimits& lim, double tol) {
  return a.dv >= lim.dv_min - tol && a.dv <= lim.dv_max + tol && a.dtheta >= lim.dtheta_min - tol &&
         a.dtheta <= lim.dtheta_max + tol;
}

VehicleState step_kinematics(const VehicleState& s, const VehicleAction& a, double dt,
                             double v_max) {
  VehicleState n;
  n.x = s.x + s.v * std::cos(s.theta) * dt;
  n.y = s.y + s.v * std::sin(s.theta) * dt;
  n.v = std::clamp(s.v + a.dv, 0.0, v_max);
  n.theta = s.theta + a.dtheta;
  return n;
}

double min_av_bv_distance(const Scene& scene, const VehicleDims& dims) {
  const OrientedRect av = footprint(scene.av, dims);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& bv : scene.bvs) best = std::min(best, rect_min_distance(av, footprint(bv, dims)));
  return best;
}

double bv_reward(const Scene& scene, Event event, const EnvConfig& cfg) {
  double r = -min_av_bv_distance(scene, cfg.dims);
  if (event == Event::av_collision) {
    r += cfg.reward_bonus;
  } else if (event == Event::bv_collision || event == Event::road_departure) {
    r -= cfg.reward_bonus;
  }
  return r;
}

double av_reward(const Scene& scene, Event event, const EnvConfig& cfg) {
  double r = (scene.av.v - 0.5 * cfg.v_max) / cfg.v_max;
  if (event == Event::av_collision) r -= cfg.reward_bonus;
  return r;
}

namespace {

bool departed(const VehicleState& s, const RoadConfig& road) {
  return s.y < 0.0 || s.y > road.paved_width() || s.x < 0.0 || s.x > road.length;
}

}  // namespace

Event detect_event(const Scene& scene, const EnvConfig& cfg) {
  const OrientedRect av = footprint(scene.av, cfg.dims);
  std::vector<OrientedRect> bvs;
  bvs.reserve(scene.bvs.size());
  for (const auto& bv : scene.bvs) bvs.push_back(footprint(bv, cfg.dims));
  for (const auto& bv : bvs) {
    if (rect_overlap(av, bv)) return Event::av_collision;
  }
  for (std::size_t i = 0; i < bvs.size(); ++i) {
    for (std::size_t j = i + 1; j < bvs.size(); ++j) {
      if (rect_overlap(bvs[i], bvs[j])) return Event::bv_collision;
    }
  }
  if (departed(scene.av, cfg.road)) return Event::road_departure;
  for (const auto& bv : scene.bvs) {
    if (departed(bv, cfg.road)) return Event::road_departure;
  }
  return Event::none;
}

namespace {

bool clear_of_others(const std::vector<VehicleState>& placed, const VehicleState& s,
                     const EnvConfig& cfg, double clearance) {
  const OrientedRect r = footprint(s, cfg.dims);
  for (const auto& p : placed) {
    if (rect_min_distance(r, footprint(p, cfg.dims)) < clearance) return false;
  }
  return true;
}

Scene sample_synthetic(const EnvConfig& cfg, const SyntheticInit& init, Rng& rng) {
  if (init.n_bv < 1 || init.n_bv > kMaxBvs) throw ConfigError("synthetic init needs 1 to 4 BVs");
  std::uniform_int_distribution<int> lane_dist(0, cfg.road.lane_count - 1);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<VehicleState> placed;
    VehicleState av{uniform(rng, init.av_x_lo, init.av_x_hi),
                    cfg.road.lane_center(lane_dist(rng)), uniform(rng, init.v_lo, init.v_hi), 0.0};
    placed.push_back(av);
    bool ok = true;
    for (std::size_t i = 0; i < init.n_bv && ok; ++i) {
      VehicleState bv{av.x + uniform(rng, -init.spread, init.spread),
                      cfg.road.lane_center(lane_dist(rng)), uniform(rng, init.v_lo, init.v_hi),
                      0.0};
      ok = clear_of_others(placed, bv, cfg, init.min_clearance);
      placed.push_back(bv);
    }
    if (!ok) continue;
    Scene scene;
    scene.av = placed.front();
    scene.bvs.assign(placed.begin() + 1, placed.end());
    scene.bv_actions.assign(scene.bvs.size(), VehicleAction{});
    return scene;
  }
  throw ConfigError("could not place a collision-free initial scene");
}

}  // namespace

Scene env_reset(const EnvConfig& cfg, const InitSource& init, Rng& rng) {
  if (const auto* pool = std::get_if<PoolInit>(&init)) {
    if (pool->scenes.empty()) throw ConfigError("initial scene pool is empty");
    std::uniform_int_distribution<std::size_t> pick(0, pool->scenes.size() - 1);
    Scene scene = pool->scenes[pick(rng)];
    scene.t = 0;
    scene.av_action = {};
    scene.bv_actions.assign(scene.bvs.size(), VehicleAction{});
    return scene;
  }
  return sample_synthetic(cfg, std::get<SyntheticInit>(init), rng);
}

StepOutcome env_step(const Scene& scene, const std::vector<VehicleAction>& bv_actions,
                     AvController& av, const EnvConfig& cfg, Rng& rng) {
  check_scene_shape(scene);
  if (bv_actions.size() != scene.bvs.size()) {
    throw StructuralError("expected " + std::to_string(scene.bvs.size()) + " BV actions, got " +
                          std::to_string(bv_actions.size()));
  }
  if (scene.t >= cfg.horizon) throw StructuralError("env_step called at or past the horizon");

  const ActionLimits lim = action_limits(cfg);
  StepOutcome out;
  out.av_action = clamp_action(av.act(scene, rng), lim);
  out.bv_actions.reserve(bv_actions.size());
  for (const auto& a : bv_actions) out.bv_actions.push_back(clamp_action(a, lim));

  Scene& next = out.next_scene;
  next.t = scene.t + 1;
  next.av = step_kinematics(scene.av, out.av_action, cfg.dt, cfg.v_max);
  next.bvs.reserve(scene.bvs.size());
  for (std::size_t i = 0; i < scene.bvs.size(); ++i) {
    next.bvs.push_back(step_kinematics(scene.bvs[i], out.bv_actions[i], cfg.dt, cfg.v_max));
  }
  next.bv_actions.assign(scene.bvs.size(), VehicleAction{});

  out.event = detect_event(next, cfg);
  if (out.event == Event::none && next.t >= cfg.horizon) out.event = Event::horizon;
  out.bv_reward = bv_reward(next, out.event, cfg);
  out.av_reward = av_reward(next, out.event, cfg);
  return out;
}

}  // namespace advscen

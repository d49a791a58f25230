#pragma once

#include <variant>
#include <vector>

#include "advscen/geometry.hpp"
#include "advscen/random.hpp"
#include "advscen/scenario.hpp"

namespace advscen {

inline constexpr double kGravity = 9.81;

struct RoadConfig {
  int lane_count = 3;
  double lane_width = 3.75;  ///< m
  double length = 1000.0;    ///< m

  double paved_width() const { return lane_count * lane_width; }
  double lane_center(int lane) const { return (lane + 0.5) * lane_width; }
  /// Lane containing lateral position y, clamped to the paved lanes.
  int lane_of(double y) const;
};

struct EnvConfig {
  double dt = 0.04;             ///< s
  long horizon = 100;           ///< frames
  double reward_bonus = 10.0;   ///< R_b
  double v_max = 40.0;          ///< m/s
  double accel_min = -0.8 * kGravity;  ///< m/s^2
  double accel_max = 0.6 * kGravity;   ///< m/s^2
  double dtheta_rate = 0.2;     ///< rad/s
  VehicleDims dims;
  RoadConfig road;
};

/// Throws ConfigError on dt <= 0, horizon < 1, R_b <= 0, lane_count < 2 or
/// lanes narrower than vehicles.
void validate(const EnvConfig& cfg);

/// Per-frame bounds on a vehicle action.
struct ActionLimits {
  double dv_min = 0.0;
  double dv_max = 0.0;
  double dtheta_min = 0.0;
  double dtheta_max = 0.0;
};

/// dv in [accel_min·dt, accel_max·dt], dtheta in [-rate·dt, +rate·dt].
ActionLimits action_limits(const EnvConfig& cfg);
VehicleAction clamp_action(const VehicleAction& a, const ActionLimits& lim);
bool within_limits(const VehicleAction& a, const ActionLimits& lim, double tol = 1e-12);

/// Position advances with the pre-update speed and heading, then v and theta
/// take their increments; v is clamped to [0, v_max].
VehicleState step_kinematics(const VehicleState& state, const VehicleAction& action, double dt,
                             double v_max = 40.0);

/// Minimum boundary distance between the AV and any BV.
double min_av_bv_distance(const Scene& scene, const VehicleDims& dims);

/// -min AV-BV distance, plus R_b on AV collision or -R_b on BV collision / road departure.
double bv_reward(const Scene& scene, Event event, const EnvConfig& cfg);
/// (v_av - v_max/2) / v_max, minus R_b on AV collision.
double av_reward(const Scene& scene, Event event, const EnvConfig& cfg);

/// Event raised by the geometry of `scene` alone (no horizon check).
/// Priority: av_collision > bv_collision > road_departure.
Event detect_event(const Scene& scene, const EnvConfig& cfg);

/// Drives the AV inside env_step. Implementations may keep per-episode state.
class AvController {
 public:
  virtual ~AvController() = default;
  virtual void reset(const Scene& /*initial*/, Rng& /*rng*/) {}
  virtual VehicleAction act(const Scene& scene, Rng& rng) = 0;
};

/// Produces one action per BV for a scene.
class BvController {
 public:
  virtual ~BvController() = default;
  virtual void reset(const Scene& /*initial*/, Rng& /*rng*/) {}
  virtual std::vector<VehicleAction> act(const Scene& scene, Rng& rng) = 0;
};

/// Random initial scenes: AV in a random lane, BVs spread longitudinally
/// around it, rejection-sampled until every pair keeps `min_clearance`.
struct SyntheticInit {
  std::size_t n_bv = 1;
  double av_x_lo = 150.0;
  double av_x_hi = 250.0;
  double v_lo = 20.0;
  double v_hi = 30.0;
  double spread = 40.0;  ///< BV x offset drawn from [-spread, +spread]
  double min_clearance = 2.0;
};

/// Head frames of recorded segments, drawn uniformly.
struct PoolInit {
  std::vector<Scene> scenes;
};

using InitSource = std::variant<PoolInit, SyntheticInit>;

/// Throws ConfigError when the pool is empty.
Scene env_reset(const EnvConfig& cfg, const InitSource& init, Rng& rng);

struct StepOutcome {
  Scene next_scene;
  VehicleAction av_action;                ///< clamped action actually applied
  std::vector<VehicleAction> bv_actions;  ///< clamped actions actually applied
  double bv_reward = 0.0;
  double av_reward = 0.0;
  Event event = Event::none;

  bool terminal() const { return event != Event::none; }
};

/// One MDP transition. Actions are clamped to the limits before use.
StepOutcome env_step(const Scene& scene, const std::vector<VehicleAction>& bv_actions,
                     AvController& av, const EnvConfig& cfg, Rng& rng);

}  // namespace advscen

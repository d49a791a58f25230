#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace advscen {

/// Maximum number of background vehicles in one scene.
inline constexpr std::size_t kMaxBvs = 4;
/// Reals per vehicle in a flattened state: x, y, v, theta.
inline constexpr std::size_t kStateDim = 4;
/// Reals per vehicle in a flattened action: dv, dtheta.
inline constexpr std::size_t kActionDim = 2;

/// Road-aligned vehicle state. x is longitudinal (direction of travel), y lateral.
struct VehicleState {
  double x = 0.0;      ///< m
  double y = 0.0;      ///< m
  double v = 0.0;      ///< m/s, longitudinal speed
  double theta = 0.0;  ///< rad, 0 = along +x

  bool operator==(const VehicleState&) const = default;
};

/// Per-frame increments applied to a vehicle.
struct VehicleAction {
  double dv = 0.0;      ///< m/s per frame
  double dtheta = 0.0;  ///< rad per frame

  bool operator==(const VehicleAction&) const = default;
};

/// One frame: the AV and its background vehicles, with the actions taken from it.
struct Scene {
  VehicleState av;
  std::vector<VehicleState> bvs;
  VehicleAction av_action;
  std::vector<VehicleAction> bv_actions;
  long t = 0;

  std::size_t bv_count() const noexcept { return bvs.size(); }
  bool operator==(const Scene&) const = default;
};

/// Terminal label of a simulation step. `none` only appears on non-terminal steps.
enum class Event { none, av_collision, bv_collision, road_departure, horizon };

std::string_view to_string(Event e);
/// Inverse of to_string; throws ParseError on an unknown label.
Event event_from_string(std::string_view s);

/// An H+1 frame sequence at a fixed interval.
struct Scenario {
  std::vector<Scene> frames;
  double dt = 0.04;
  Event outcome = Event::horizon;

  bool operator==(const Scenario&) const = default;
};

/// RL-ready record. States are flattened AV-first; actions are the BVs' only.
struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;

  bool operator==(const Transition&) const = default;
};

/// Throws StructuralError when bvs/bv_actions lengths differ or N is outside [1, 4].
void check_scene_shape(const Scene& scene);

/// [x, y, v, theta] per vehicle, AV in slot 0. Length 4·(N+1).
std::vector<double> flatten_scene(const Scene& scene);
/// Inverse of flatten_scene for the state fields. Actions are zeroed, t = 0.
Scene unflatten_scene(std::span<const double> state);
/// [dv, dtheta] per BV. Length 2·N.
std::vector<double> flatten_bv_actions(const Scene& scene);
std::vector<VehicleAction> unflatten_actions(std::span<const double> actions);

/// Every violated invariant, in frame order. Empty iff the scenario is valid.
std::vector<std::string> validate_scenario(const Scenario& sc);

/// Frame-to-frame transitions of a scenario. `reward(next_scene, event)` labels
/// each step; the final step carries the scenario outcome and done = true.
std::vector<Transition> scenario_transitions(
    const Scenario& sc, const std::function<double(const Scene&, Event)>& reward);

/// Line-delimited scenario log: a `#` header line with dt, N and outcome,
/// then one frame per line:
///   t av.x av.y av.v av.theta av.dv av.dtheta [x y v theta dv dtheta per BV]
/// space separated, fixed point with 6 decimals.
void write_scenario_log(const Scenario& sc, std::ostream& out);
/// Throws ParseError (with line number) on malformed input, and on an empty source.
Scenario read_scenario_log(std::istream& in);

}  // namespace advscen

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advscen/nn.hpp"
#include "advscen/traffic_sim.hpp"

namespace advscen {

enum class PolicyKind { uniform, car_following, fvdm, learned, dr_bv };

/// Names as used in configuration files: "uniform", "sumo", "fvdm", "rl-agent", "dr".
std::string_view policy_name(PolicyKind kind);
/// Throws ConfigError listing the valid names.
PolicyKind policy_kind_from_name(std::string_view name);

/// Krauss safe-speed follower with a gap-and-incentive lane-change rule.
struct CarFollowingParams {
  double accel_max = 2.0;          ///< m/s^2
  double decel_max = 4.5;          ///< m/s^2
  double tau = 1.0;                ///< s
  double v_desired = 33.3;         ///< m/s
  double lc_safety_gap = 10.0;     ///< m, bumper gap required ahead and behind in the target lane
  double lc_incentive_gain = 1.0;  ///< scales the expected speed gain
  double lc_speed_threshold = 1.0; ///< m/s, scaled gain needed to start a lane change
};

/// Full velocity difference model.
struct FvdmParams {
  double kappa = 0.41;  ///< 1/s
  double lam = 0.5;     ///< 1/s
  double v1 = 6.75;     ///< m/s
  double v2 = 7.91;     ///< m/s
  double c1 = 0.13;     ///< 1/m
  double c2 = 1.57;
  double l_c = 5.0;     ///< m

  /// Optimal velocity for centre-to-centre headway dx.
  double optimal_velocity(double dx) const;
};

/// Domain randomisation: constant per-episode speeds, coin-flip lane changes.
struct DrParams {
  double v_lo = 15.0;         ///< m/s
  double v_hi = 35.0;         ///< m/s
  double tick = 1.0;          ///< s between keep/change decisions
  double ramp_accel = 2.0;    ///< m/s^2 used to reach the drawn speed
  bool traffic_guard = true;  ///< cap speed by the safe speed and refuse unsafe lane changes
};

struct LaneChangeParams {
  double duration = 2.0;      ///< s, open-loop heading profile length
  double keep_gain = 0.5;     ///< 1/s, lateral lane-keeping gain outside manoeuvres
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::uniform;
  CarFollowingParams car_following;
  FvdmParams fvdm;
  DrParams dr;
  LaneChangeParams lane_change;
  std::string checkpoint;   ///< learned policies only
  bool stochastic = false;  ///< learned policies only
};

/// Throws ConfigError on non-positive gains or rates, negative FVDM
/// sensitivities, an empty DR speed range, or non-finite values.
void validate(const PolicySpec& spec);

// --- Scene queries used by the rule-based drivers -------------------------

/// Vehicle k of a scene: 0 is the AV, i+1 is BV i.
const VehicleState& vehicle(const Scene& scene, std::size_t k);
std::size_t vehicle_count(const Scene& scene);

struct Neighbor {
  std::size_t index = 0;
  double gap = 0.0;  ///< bumper-to-bumper, m
  double speed = 0.0;
};

/// Nearest vehicle ahead whose lateral offset is under width + 0.5 m.
std::optional<Neighbor> find_leader(const Scene& scene, std::size_t ego, const EnvConfig& cfg);
/// Nearest vehicles ahead and behind `ego` inside the lane centred at lane_center.
std::optional<Neighbor> lane_leader(const Scene& scene, std::size_t ego, int lane,
                                    const EnvConfig& cfg);
std::optional<Neighbor> lane_follower(const Scene& scene, std::size_t ego, int lane,
                                      const EnvConfig& cfg);

/// v_leader + (gap - v_leader tau) / (v / decel_max + tau).
double krauss_safe_speed(double v, const Neighbor& leader, const CarFollowingParams& p);

// --- Policies ---------------------------------------------------------------

VehicleAction uniform_policy(const VehicleState& state);

/// Open-loop lane change: constant heading rate for half the manoeuvre, then reversed.
class LaneChangeManeuver {
 public:
  /// `direction` is +1 toward larger y, -1 toward smaller y.
  void start(int direction, const VehicleState& state, const EnvConfig& cfg,
             const LaneChangeParams& p);
  bool active() const { return frames_left_ > 0; }
  int direction() const { return direction_; }
  /// Heading increment for the next frame; advances the manoeuvre.
  double next_dtheta();

 private:
  int direction_ = 0;
  int frames_left_ = 0;
  int half_frames_ = 0;
  double rate_ = 0.0;  ///< rad per frame
};

/// Heading increment steering toward the current lane centre.
double lane_keep_dtheta(const VehicleState& s, const EnvConfig& cfg, const LaneChangeParams& p);

/// Lane-change direction (+1/-1) if the speed incentive allows it and the
/// target lane is clear, else 0. Clear means every vehicle in the lane, or
/// drifting into it, is more than lc_safety_gap away plus whatever the closing
/// speed eats over the manoeuvre and tau.
int lane_change_decision(const Scene& scene, std::size_t ego, const CarFollowingParams& p,
                         const EnvConfig& cfg, const LaneChangeParams& lc = {});

/// Stateful rule-based driver for vehicle `ego` ("sumo" or "fvdm").
class RuleDriver {
 public:
  RuleDriver(PolicyKind kind, std::size_t ego, const PolicySpec& spec, const EnvConfig& cfg);
  void reset() { maneuver_ = {}; }
  VehicleAction act(const Scene& scene);

 private:
  PolicyKind kind_;
  std::size_t ego_;
  PolicySpec spec_;
  EnvConfig cfg_;
  LaneChangeManeuver maneuver_;
};

/// Krauss longitudinal increment (before lane-change handling).
double car_following_dv(const Scene& scene, std::size_t ego, const CarFollowingParams& p,
                        const EnvConfig& cfg);
/// FVDM longitudinal increment; only the forward leader enters.
double fvdm_dv(const Scene& scene, std::size_t ego, const FvdmParams& p, const EnvConfig& cfg);

/// Single-frame "sumo" action for vehicle `ego` with no manoeuvre in progress.
VehicleAction car_following_policy(const Scene& scene, std::size_t ego,
                                   const CarFollowingParams& params, const EnvConfig& cfg);
VehicleAction fvdm_policy(const Scene& scene, std::size_t ego, const FvdmParams& params,
                          const CarFollowingParams& lane_change_params, const EnvConfig& cfg);

/// Per-episode domain-randomised BVs.
class DrBvController final : public BvController {
 public:
  DrBvController(DrParams dr, CarFollowingParams cf, LaneChangeParams lc, EnvConfig cfg);
  void reset(const Scene& initial, Rng& rng) override;
  std::vector<VehicleAction> act(const Scene& scene, Rng& rng) override;

  const std::vector<double>& target_speeds() const { return target_v_; }
  /// Coin flips taken so far and how many of them chose "change".
  long decisions() const { return decisions_; }
  long change_votes() const { return change_votes_; }

 private:
  DrParams dr_;
  CarFollowingParams cf_;
  LaneChangeParams lc_;
  EnvConfig cfg_;
  std::vector<double> target_v_;
  std::vector<LaneChangeManeuver> maneuvers_;
  long decisions_ = 0;
  long change_votes_ = 0;
};

// --- Learned policies ---------------------------------------------------------

enum class Role { bv, av };
enum class ActMode { deterministic, stochastic };

/// Fixed affine conditioning of a flattened state: AV slot scaled to the
/// road, BV slots expressed relative to the AV. Dimension is preserved.
nn::Vector encode_state(std::span<const double> state, const EnvConfig& cfg);
nn::Matrix encode_states(const std::vector<std::span<const double>>& states, const EnvConfig& cfg);

/// Bounds of the flattened action vector for a role with n_bv BVs.
nn::Bounds role_bounds(Role role, std::size_t n_bv, const EnvConfig& cfg);
/// Affine map of actions to [-1, 1] per dimension (critic input conditioning).
nn::Vector to_unit(const nn::Vector& action, const nn::Bounds& b);

/// Actor network plus the metadata needed to run it.
struct LearnedPolicy {
  nn::Mlp net;
  Role role = Role::bv;
  std::size_t n_bv = 1;

  std::size_t state_dim() const { return kStateDim * (n_bv + 1); }
  std::size_t action_dim() const { return role == Role::bv ? kActionDim * n_bv : kActionDim; }
};

/// Throws StructuralError when the state length is not the network's input dimension.
std::vector<double> learned_policy_adapter(const LearnedPolicy& policy,
                                           std::span<const double> state, ActMode mode, Rng& rng,
                                           const EnvConfig& cfg);

void save_policy(const LearnedPolicy& policy, const std::string& path);
LearnedPolicy load_policy(const std::string& path);

// --- Controller factories -----------------------------------------------------

/// AV controllers for "uniform", "sumo", "fvdm" and "rl-agent" (needs spec.checkpoint).
std::unique_ptr<AvController> make_av_controller(const PolicySpec& spec, const EnvConfig& cfg);
/// BV controllers for "dr", "uniform", "sumo", "fvdm" and "rl-agent".
std::unique_ptr<BvController> make_bv_controller(const PolicySpec& spec, const EnvConfig& cfg);

/// Controllers around an in-memory learned policy.
std::unique_ptr<AvController> make_learned_av(LearnedPolicy policy, ActMode mode,
                                              const EnvConfig& cfg);
std::unique_ptr<BvController> make_learned_bvs(LearnedPolicy policy, ActMode mode,
                                               const EnvConfig& cfg);

}  // namespace advscen

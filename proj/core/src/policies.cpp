#include "advscen/policies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "advscen/errors.hpp"

namespace advscen {

namespace {

constexpr std::array<std::pair<PolicyKind, std::string_view>, 5> kNames{{
    {PolicyKind::uniform, "uniform"},
    {PolicyKind::car_following, "sumo"},
    {PolicyKind::fvdm, "fvdm"},
    {PolicyKind::learned, "rl-agent"},
    {PolicyKind::dr_bv, "dr"},
}};

bool finite_all(std::initializer_list<double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string_view policy_name(PolicyKind kind) {
  for (const auto& [k, n] : kNames) {
    if (k == kind) return n;
  }
  return "uniform";
}

PolicyKind policy_kind_from_name(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  std::string valid;
  for (const auto& [k, n] : kNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("unknown policy '" + std::string(name) + "'; valid names: " + valid);
}

double FvdmParams::optimal_velocity(double dx) const {
  return v1 + v2 * std::tanh(c1 * (dx - l_c) - c2);
}

void validate(const PolicySpec& spec) {
  const auto& cf = spec.car_following;
  if (!finite_all({cf.accel_max, cf.decel_max, cf.tau, cf.v_desired, cf.lc_safety_gap,
                   cf.lc_incentive_gain, cf.lc_speed_threshold})) {
    throw ConfigError("car-following parameters must be finite");
  }
  if (!(cf.accel_max > 0 && cf.decel_max > 0 && cf.tau > 0)) {
    throw ConfigError("car-following accel_max, decel_max and tau must be positive");
  }
  const auto& fv = spec.fvdm;
  if (!finite_all({fv.kappa, fv.lam, fv.v1, fv.v2, fv.c1, fv.c2, fv.l_c})) {
    throw ConfigError("fvdm parameters must be finite");
  }
  if (fv.kappa < 0 || fv.lam < 0) throw ConfigError("fvdm kappa and lam must be non-negative");
  const auto& dr = spec.dr;
  if (!finite_all({dr.v_lo, dr.v_hi, dr.tick, dr.ramp_accel}) || !(dr.v_lo <= dr.v_hi) ||
      dr.v_lo < 0 || !(dr.tick > 0) || !(dr.ramp_accel > 0)) {
    throw ConfigError("dr needs 0 <= v_lo <= v_hi and positive tick and ramp_accel");
  }
  if (!(spec.lane_change.duration > 0) || !(spec.lane_change.keep_gain >= 0)) {
    throw ConfigError("lane-change duration must be positive");
  }
}

const VehicleState& vehicle(const Scene& scene, std::size_t k) {
  return k == 0 ? scene.av : scene.bvs.at(k - 1);
}

std::size_t vehicle_count(const Scene& scene) { return scene.bvs.size() + 1; }

std::optional<Neighbor> find_leader(const Scene& scene, std::size_t ego, const EnvConfig& cfg) {
  const VehicleState& me = vehicle(scene, ego);
  const double lateral = cfg.dims.width + 0.5;
  std::optional<Neighbor> best;
  for (std::size_t k = 0; k < vehicle_count(scene); ++k) {
    if (k == ego) continue;
    const VehicleState& o = vehicle(scene, k);
    const double dx = o.x - me.x;
    if (dx <= 0.0 || std::abs(o.y - me.y) >= lateral) continue;
    if (!best || dx - cfg.dims.length < best->gap) best = Neighbor{k, dx - cfg.dims.length, o.v};
  }
  return best;
}

namespace {

bool in_lane(const VehicleState& s, int lane, const EnvConfig& cfg) {
  return std::abs(s.y - cfg.road.lane_center(lane)) < 0.5 * cfg.road.lane_width;
}

/// Target lane is clear if every vehicle in it, or drifting into it, keeps a
/// gap that survives the closing speed over the manoeuvre. Anyone abreast in
/// the lane beyond also blocks, since both could pick the same gap at once.
bool lane_change_clear(const Scene& scene, std::size_t ego, int target, const CarFollowingParams& cf,
                       const LaneChangeParams& lc, const EnvConfig& cfg) {
  const VehicleState& me = vehicle(scene, ego);
  const double horizon = lc.duration + cf.tau;
  const double center = cfg.road.lane_center(target);
  const int beyond = 2 * target - cfg.road.lane_of(me.y);
  for (std::size_t k = 0; k < vehicle_count(scene); ++k) {
    if (k == ego) continue;
    const VehicleState& o = vehicle(scene, k);
    const double dx = o.x - me.x;
    const double gap = std::abs(dx) - cfg.dims.length;
    if (beyond >= 0 && beyond < cfg.road.lane_count && in_lane(o, beyond, cfg) && gap <= cf.lc_safety_gap) {
      return false;
    }
    const double y_later = o.y + o.v * std::sin(o.theta) * horizon;
    const bool occupies = in_lane(o, target, cfg) ||
                          (std::min(o.y, y_later) < center + 0.5 * cfg.road.lane_width &&
                           std::max(o.y, y_later) > center - 0.5 * cfg.road.lane_width);
    if (!occupies) continue;
    const double closing = dx > 0 ? me.v - o.v : o.v - me.v;
    if (gap <= cf.lc_safety_gap + std::max(0.0, closing) * horizon) return false;
  }
  return true;
}

}  // namespace

std::optional<Neighbor> lane_leader(const Scene& scene, std::size_t ego, int lane,
                                    const EnvConfig& cfg) {
  const VehicleState& me = vehicle(scene, ego);
  std::optional<Neighbor> best;
  for (std::size_t k = 0; k < vehicle_count(scene); ++k) {
    if (k == ego) continue;
    const VehicleState& o = vehicle(scene, k);
    const double dx = o.x - me.x;
    if (dx <= 0.0 || !in_lane(o, lane, cfg)) continue;
    if (!best || dx - cfg.dims.length < best->gap) best = Neighbor{k, dx - cfg.dims.length, o.v};
  }
  return best;
}

std::optional<Neighbor> lane_follower(const Scene& scene, std::size_t ego, int lane,
                                      const EnvConfig& cfg) {
  const VehicleState& me = vehicle(scene, ego);
  std::optional<Neighbor> best;
  for (std::size_t k = 0; k < vehicle_count(scene); ++k) {
    if (k == ego) continue;
    const VehicleState& o = vehicle(scene, k);
    const double dx = me.x - o.x;
    if (dx < 0.0 || !in_lane(o, lane, cfg)) continue;
    if (!best || dx - cfg.dims.length < best->gap) best = Neighbor{k, dx - cfg.dims.length, o.v};
  }
  return best;
}

double krauss_safe_speed(double v, const Neighbor& leader, const CarFollowingParams& p) {
  return leader.speed + (leader.gap - leader.speed * p.tau) / (v / p.decel_max + p.tau);
}

VehicleAction uniform_policy(const VehicleState& /*state*/) { return {0.0, 0.0}; }

void LaneChangeManeuver::start(int direction, const VehicleState& state, const EnvConfig& cfg,
                               const LaneChangeParams& p) {
  const int total = std::max(2, static_cast<int>(std::lround(p.duration / cfg.dt)));
  half_frames_ = total / 2;
  frames_left_ = 2 * half_frames_;
  direction_ = direction;
  // Lateral shift of the symmetric profile is v * rate * (T/2)^2.
  const double half_t = half_frames_ * cfg.dt;
  const double rate = cfg.road.lane_width / (std::max(state.v, 1.0) * half_t * half_t);
  rate_ = std::min(rate, cfg.dtheta_rate) * cfg.dt;
}

double LaneChangeManeuver::next_dtheta() {
  if (frames_left_ <= 0) return 0.0;
  const int k = 2 * half_frames_ - frames_left_;
  --frames_left_;
  return (k < half_frames_ ? 1.0 : -1.0) * direction_ * rate_;
}

double lane_keep_dtheta(const VehicleState& s, const EnvConfig& cfg, const LaneChangeParams& p) {
  const double center = cfg.road.lane_center(cfg.road.lane_of(s.y));
  const double desired =
      std::clamp(std::atan(p.keep_gain * (center - s.y) / std::max(s.v, 1.0)), -0.1, 0.1);
  const double step = cfg.dtheta_rate * cfg.dt;
  return std::clamp(desired - s.theta, -step, step);
}

int lane_change_decision(const Scene& scene, std::size_t ego, const CarFollowingParams& p,
                         const EnvConfig& cfg, const LaneChangeParams& lc) {
  const VehicleState& me = vehicle(scene, ego);
  const int lane = cfg.road.lane_of(me.y);
  const auto leader = lane_leader(scene, ego, lane, cfg);
  if (!leader) return 0;
  const double v_here = std::min(p.v_desired, krauss_safe_speed(me.v, *leader, p));
  int best_dir = 0;
  double best_gain = p.lc_speed_threshold;
  for (int dir : {+1, -1}) {
    const int target = lane + dir;
    if (target < 0 || target >= cfg.road.lane_count) continue;
    if (!lane_change_clear(scene, ego, target, p, lc, cfg)) continue;
    const auto front = lane_leader(scene, ego, target, cfg);
    const double v_there =
        front ? std::min(p.v_desired, krauss_safe_speed(me.v, *front, p)) : p.v_desired;
    const double gain = p.lc_incentive_gain * (v_there - v_here);
    if (gain > best_gain) {
      best_gain = gain;
      best_dir = dir;
    }
  }
  return best_dir;
}

double car_following_dv(const Scene& scene, std::size_t ego, const CarFollowingParams& p,
                        const EnvConfig& cfg) {
  const VehicleState& me = vehicle(scene, ego);
  double target = std::min(p.v_desired, me.v + p.accel_max * cfg.dt);
  if (const auto leader = find_leader(scene, ego, cfg)) {
    target = std::min(target, krauss_safe_speed(me.v, *leader, p));
  }
  target = std::max(target, 0.0);
  const ActionLimits lim = action_limits(cfg);
  return std::clamp(target - me.v, lim.dv_min, lim.dv_max);
}

double fvdm_dv(const Scene& scene, std::size_t ego, const FvdmParams& p, const EnvConfig& cfg) {
  const VehicleState& me = vehicle(scene, ego);
  double a = 0.0;
  if (const auto leader = find_leader(scene, ego, cfg)) {
    const double dx = leader->gap + cfg.dims.length;
    a = p.kappa * (p.optimal_velocity(dx) - me.v) + p.lam * (leader->speed - me.v);
  } else {
    a = p.kappa * (p.v1 + p.v2 - me.v);
  }
  const ActionLimits lim = action_limits(cfg);
  return std::clamp(a * cfg.dt, lim.dv_min, lim.dv_max);
}

namespace {

VehicleAction rule_action(PolicyKind kind, const Scene& scene, std::size_t ego,
                          const PolicySpec& spec, const EnvConfig& cfg,
                          LaneChangeManeuver& maneuver) {
  VehicleAction a;
  a.dv = kind == PolicyKind::fvdm ? fvdm_dv(scene, ego, spec.fvdm, cfg)
                                  : car_following_dv(scene, ego, spec.car_following, cfg);
  const VehicleState& me = vehicle(scene, ego);
  if (!maneuver.active()) {
    if (const int dir = lane_change_decision(scene, ego, spec.car_following, cfg, spec.lane_change); dir != 0) {
      maneuver.start(dir, me, cfg, spec.lane_change);
    }
  }
  a.dtheta = maneuver.active() ? maneuver.next_dtheta() : lane_keep_dtheta(me, cfg, spec.lane_change);
  return clamp_action(a, action_limits(cfg));
}

}  // namespace

VehicleAction car_following_policy(const Scene& scene, std::size_t ego,
                                   const CarFollowingParams& params, const EnvConfig& cfg) {
  PolicySpec spec;
  spec.car_following = params;
  LaneChangeManeuver m;
  return rule_action(PolicyKind::car_following, scene, ego, spec, cfg, m);
}

VehicleAction fvdm_policy(const Scene& scene, std::size_t ego, const FvdmParams& params,
                          const CarFollowingParams& lane_change_params, const EnvConfig& cfg) {
  PolicySpec spec;
  spec.fvdm = params;
  spec.car_following = lane_change_params;
  LaneChangeManeuver m;
  return rule_action(PolicyKind::fvdm, scene, ego, spec, cfg, m);
}

RuleDriver::RuleDriver(PolicyKind kind, std::size_t ego, const PolicySpec& spec,
                       const EnvConfig& cfg)
    : kind_(kind), ego_(ego), spec_(spec), cfg_(cfg) {
  if (kind != PolicyKind::car_following && kind != PolicyKind::fvdm) {
    throw ConfigError("RuleDriver supports only the sumo and fvdm models");
  }
}

VehicleAction RuleDriver::act(const Scene& scene) {
  return rule_action(kind_, scene, ego_, spec_, cfg_, maneuver_);
}

DrBvController::DrBvController(DrParams dr, CarFollowingParams cf, LaneChangeParams lc,
                               EnvConfig cfg)
    : dr_(dr), cf_(cf), lc_(lc), cfg_(cfg) {}

void DrBvController::reset(const Scene& initial, Rng& rng) {
  target_v_.clear();
  for (std::size_t i = 0; i < initial.bvs.size(); ++i) {
    target_v_.push_back(uniform(rng, dr_.v_lo, dr_.v_hi));
  }
  maneuvers_.assign(initial.bvs.size(), LaneChangeManeuver{});
}

std::vector<VehicleAction> DrBvController::act(const Scene& scene, Rng& rng) {
  if (target_v_.size() != scene.bvs.size()) reset(scene, rng);
  const ActionLimits lim = action_limits(cfg_);
  const long tick_frames = std::max(1L, std::lround(dr_.tick / cfg_.dt));
  std::bernoulli_distribution coin(0.5);
  std::vector<VehicleAction> out(scene.bvs.size());
  for (std::size_t i = 0; i < scene.bvs.size(); ++i) {
    const std::size_t ego = i + 1;
    const VehicleState& me = scene.bvs[i];

    double desired = target_v_[i];
    double lower = -dr_.ramp_accel * cfg_.dt;
    if (dr_.traffic_guard) {
      if (const auto leader = find_leader(scene, ego, cfg_)) {
        const double safe = std::max(0.0, krauss_safe_speed(me.v, *leader, cf_));
        if (safe < desired) {
          desired = safe;
          lower = lim.dv_min;
        }
      }
    }
    out[i].dv = std::clamp(desired - me.v, lower, dr_.ramp_accel * cfg_.dt);

    LaneChangeManeuver& m = maneuvers_[i];
    if (!m.active() && scene.t % tick_frames == 0) {
      ++decisions_;
      const bool change = coin(rng);
      const bool up = coin(rng);
      if (change) {
        ++change_votes_;
        const int lane = cfg_.road.lane_of(me.y);
        int dir = up ? +1 : -1;
        if (lane + dir < 0 || lane + dir >= cfg_.road.lane_count) dir = -dir;
        bool safe = true;
        if (dr_.traffic_guard) {
          safe = lane_change_clear(scene, ego, lane + dir, cf_, lc_, cfg_);
        }
        if (safe) m.start(dir, me, cfg_, lc_);
      }
    }
    out[i].dtheta = m.active() ? m.next_dtheta() : lane_keep_dtheta(me, cfg_, lc_);
    out[i] = clamp_action(out[i], lim);
  }
  return out;
}

// --- learned -----------------------------------------------------------------

nn::Vector encode_state(std::span<const double> state, const EnvConfig& cfg) {
  if (state.size() < 2 * kStateDim || state.size() % kStateDim != 0) {
    throw StructuralError("encode_state: length must be 4*(N+1)");
  }
  const double half_len = 0.5 * cfg.road.length;
  const double half_w = 0.5 * cfg.road.paved_width();
  const double half_v = 0.5 * cfg.v_max;
  nn::Vector e(static_cast<Eigen::Index>(state.size()));
  const double ax = state[0], ay = state[1], av = state[2];
  e(0) = (ax - half_len) / half_len;
  e(1) = (ay - half_w) / half_w;
  e(2) = (av - half_v) / half_v;
  e(3) = state[3] / 0.2;
  for (std::size_t o = kStateDim; o < state.size(); o += kStateDim) {
    e(o) = (state[o] - ax) / 50.0;
    e(o + 1) = (state[o + 1] - ay) / cfg.road.lane_width;
    e(o + 2) = (state[o + 2] - av) / 10.0;
    e(o + 3) = state[o + 3] / 0.2;
  }
  return e;
}

nn::Matrix encode_states(const std::vector<std::span<const double>>& states,
                         const EnvConfig& cfg) {
  if (states.empty()) return {};
  nn::Matrix m(static_cast<Eigen::Index>(states.front().size()),
               static_cast<Eigen::Index>(states.size()));
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (states[j].size() != states.front().size()) {
      throw StructuralError("encode_states: ragged batch");
    }
    m.col(static_cast<Eigen::Index>(j)) = encode_state(states[j], cfg);
  }
  return m;
}

nn::Bounds role_bounds(Role role, std::size_t n_bv, const EnvConfig& cfg) {
  const ActionLimits lim = action_limits(cfg);
  const std::size_t vehicles = role == Role::bv ? n_bv : 1;
  nn::Bounds b{nn::Vector(2 * vehicles), nn::Vector(2 * vehicles)};
  for (std::size_t i = 0; i < vehicles; ++i) {
    b.lo(2 * i) = lim.dv_min;
    b.hi(2 * i) = lim.dv_max;
    b.lo(2 * i + 1) = lim.dtheta_min;
    b.hi(2 * i + 1) = lim.dtheta_max;
  }
  return b;
}

nn::Vector to_unit(const nn::Vector& action, const nn::Bounds& b) {
  return (2.0 * (action - b.lo).array() / (b.hi - b.lo).array() - 1.0).matrix();
}

std::vector<double> learned_policy_adapter(const LearnedPolicy& policy,
                                           std::span<const double> state, ActMode mode, Rng& rng,
                                           const EnvConfig& cfg) {
  if (state.size() != policy.net.input_dim() || state.size() != policy.state_dim()) {
    throw StructuralError("policy expects a state of length " +
                          std::to_string(policy.net.input_dim()) + ", got " +
                          std::to_string(state.size()));
  }
  if (policy.net.output_dim() != 2 * policy.action_dim()) {
    throw StructuralError("policy network output does not match its action dimension");
  }
  const nn::GaussianHead head = nn::split_head(policy.net.forward(encode_state(state, cfg)));
  const nn::Bounds b = role_bounds(policy.role, policy.n_bv, cfg);
  const nn::Vector a = mode == ActMode::deterministic ? nn::squashed_mean(head, b)
                                                      : nn::sample_squashed(head, b, rng).action;
  return {a.data(), a.data() + a.size()};
}

namespace {

constexpr char kPolicyMagic[8] = {'A', 'D', 'V', 'S', 'P', 'O', 'L', '\0'};

}  // namespace

void save_policy(const LearnedPolicy& policy, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write policy checkpoint " + path);
  out.write(kPolicyMagic, 8);
  const std::uint32_t header[3] = {1u, static_cast<std::uint32_t>(policy.role),
                                   static_cast<std::uint32_t>(policy.n_bv)};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  nn::save_mlp(policy.net, out);
}

LearnedPolicy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open policy checkpoint " + path);
  char magic[8];
  std::uint32_t header[3];
  if (!in.read(magic, 8) || std::memcmp(magic, kPolicyMagic, 8) != 0 ||
      !in.read(reinterpret_cast<char*>(header), sizeof header) || header[0] != 1u) {
    throw ParseError("not a policy checkpoint: " + path, 0);
  }
  LearnedPolicy p;
  p.role = header[1] == 0 ? Role::bv : Role::av;
  p.n_bv = header[2];
  if (p.n_bv < 1 || p.n_bv > kMaxBvs) throw StructuralError("checkpoint BV count out of range");
  p.net = nn::load_mlp(in);
  if (p.net.input_dim() != p.state_dim() || p.net.output_dim() != 2 * p.action_dim()) {
    throw StructuralError("checkpoint network dimensions disagree with its header");
  }
  return p;
}

// --- controllers -------------------------------------------------------------

namespace {

class UniformAv final : public AvController {
 public:
  VehicleAction act(const Scene& scene, Rng&) override { return uniform_policy(scene.av); }
};

class RuleAv final : public AvController {
 public:
  RuleAv(PolicyKind kind, const PolicySpec& spec, const EnvConfig& cfg)
      : driver_(kind, 0, spec, cfg) {}
  void reset(const Scene&, Rng&) override { driver_.reset(); }
  VehicleAction act(const Scene& scene, Rng&) override { return driver_.act(scene); }

 private:
  RuleDriver driver_;
};

class LearnedAv final : public AvController {
 public:
  LearnedAv(LearnedPolicy p, ActMode mode, const EnvConfig& cfg)
      : policy_(std::move(p)), mode_(mode), cfg_(cfg) {
    if (policy_.role != Role::av) throw ConfigError("checkpoint is not an AV policy");
  }
  VehicleAction act(const Scene& scene, Rng& rng) override {
    const auto a = learned_policy_adapter(policy_, flatten_scene(scene), mode_, rng, cfg_);
    return {a[0], a[1]};
  }

 private:
  LearnedPolicy policy_;
  ActMode mode_;
  EnvConfig cfg_;
};

class UniformBvs final : public BvController {
 public:
  std::vector<VehicleAction> act(const Scene& scene, Rng&) override {
    return std::vector<VehicleAction>(scene.bvs.size());
  }
};

class RuleBvs final : public BvController {
 public:
  RuleBvs(PolicyKind kind, const PolicySpec& spec, const EnvConfig& cfg)
      : kind_(kind), spec_(spec), cfg_(cfg) {}
  void reset(const Scene& initial, Rng&) override {
    drivers_.clear();
    for (std::size_t i = 0; i < initial.bvs.size(); ++i) drivers_.emplace_back(kind_, i + 1, spec_, cfg_);
  }
  std::vector<VehicleAction> act(const Scene& scene, Rng& rng) override {
    if (drivers_.size() != scene.bvs.size()) reset(scene, rng);
    std::vector<VehicleAction> out;
    for (auto& d : drivers_) out.push_back(d.act(scene));
    return out;
  }

 private:
  PolicyKind kind_;
  PolicySpec spec_;
  EnvConfig cfg_;
  std::vector<RuleDriver> drivers_;
};

class LearnedBvs final : public BvController {
 public:
  LearnedBvs(LearnedPolicy p, ActMode mode, const EnvConfig& cfg)
      : policy_(std::move(p)), mode_(mode), cfg_(cfg) {
    if (policy_.role != Role::bv) throw ConfigError("checkpoint is not a BV policy");
  }
  std::vector<VehicleAction> act(const Scene& scene, Rng& rng) override {
    return unflatten_actions(learned_policy_adapter(policy_, flatten_scene(scene), mode_, rng, cfg_));
  }

 private:
  LearnedPolicy policy_;
  ActMode mode_;
  EnvConfig cfg_;
};

ActMode mode_of(const PolicySpec& spec) {
  return spec.stochastic ? ActMode::stochastic : ActMode::deterministic;
}

}  // namespace

std::unique_ptr<AvController> make_av_controller(const PolicySpec& spec, const EnvConfig& cfg) {
  validate(spec);
  switch (spec.kind) {
    case PolicyKind::uniform: return std::make_unique<UniformAv>();
    case PolicyKind::car_following:
    case PolicyKind::fvdm: return std::make_unique<RuleAv>(spec.kind, spec, cfg);
    case PolicyKind::learned:
      if (spec.checkpoint.empty()) throw ConfigError("rl-agent AV needs a checkpoint path");
      return std::make_unique<LearnedAv>(load_policy(spec.checkpoint), mode_of(spec), cfg);
    case PolicyKind::dr_bv: break;
  }
  throw ConfigError("'dr' is a BV policy and cannot drive the AV");
}

std::unique_ptr<BvController> make_bv_controller(const PolicySpec& spec, const EnvConfig& cfg) {
  validate(spec);
  switch (spec.kind) {
    case PolicyKind::uniform: return std::make_unique<UniformBvs>();
    case PolicyKind::car_following:
    case PolicyKind::fvdm: return std::make_unique<RuleBvs>(spec.kind, spec, cfg);
    case PolicyKind::learned:
      if (spec.checkpoint.empty()) throw ConfigError("rl-agent BVs need a checkpoint path");
      return std::make_unique<LearnedBvs>(load_policy(spec.checkpoint), mode_of(spec), cfg);
    case PolicyKind::dr_bv:
      return std::make_unique<DrBvController>(spec.dr, spec.car_following, spec.lane_change, cfg);
  }
  throw ConfigError("unsupported BV policy");
}

std::unique_ptr<AvController> make_learned_av(LearnedPolicy policy, ActMode mode,
                                              const EnvConfig& cfg) {
  return std::make_unique<LearnedAv>(std::move(policy), mode, cfg);
}

std::unique_ptr<BvController> make_learned_bvs(LearnedPolicy policy, ActMode mode,
                                               const EnvConfig& cfg) {
  return std::make_unique<LearnedBvs>(std::move(policy), mode, cfg);
}

}  // namespace advscen

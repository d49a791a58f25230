#include "advscen/config.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "advscen/errors.hpp"

namespace advscen {

namespace {

using nlohmann::json;

// Reads the keys of one object, rejecting any it does not consume.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("section '" + name_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
        throw ConfigError("unknown key '" + name_ + "." + it.key() + "'");
      }
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.emplace_back(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("bad value for '" + name_ + "." + key + "'");
    }
  }
  const json* child(const char* key) {
    seen_.emplace_back(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string path(const char* key) const { return name_ + "." + key; }

 private:
  const json& j_;
  std::string name_;
  std::vector<std::string> seen_;
};

void read_ratio(Section& s, double& out) {
  if (const json* r = s.child("sim_real_ratio")) {
    if (r->is_string()) {
      out = parse_ratio(r->get<std::string>());
    } else if (r->is_number()) {
      out = r->get<double>();
      if (!(out >= 0.0)) throw ConfigError("sim_real_ratio must be non-negative");
    } else {
      throw ConfigError("sim_real_ratio must be a number or \"inf\"");
    }
  }
}

void read_env(const json& j, AppConfig& c) {
  Section s(j, "env");
  EnvConfig& e = c.env;
  s.get("dt", e.dt);
  s.get("horizon", e.horizon);
  s.get("reward_bonus", e.reward_bonus);
  s.get("v_max", e.v_max);
  s.get("accel_min", e.accel_min);
  s.get("accel_max", e.accel_max);
  s.get("dtheta_rate", e.dtheta_rate);
  s.get("vehicle_length", e.dims.length);
  s.get("vehicle_width", e.dims.width);
  s.get("lane_count", e.road.lane_count);
  s.get("lane_width", e.road.lane_width);
  s.get("road_length", e.road.length);
  s.get("n_bv", c.synthetic_init.n_bv);
  if (const json* init = s.child("synthetic_init")) {
    Section si(*init, "env.synthetic_init");
    SyntheticInit& x = c.synthetic_init;
    si.get("av_x_lo", x.av_x_lo);
    si.get("av_x_hi", x.av_x_hi);
    si.get("v_lo", x.v_lo);
    si.get("v_hi", x.v_hi);
    si.get("spread", x.spread);
    si.get("min_clearance", x.min_clearance);
  }
}

PolicySpec read_policy(const json& j, const std::string& name) {
  PolicySpec p;
  Section s(j, name);
  if (const json* k = s.child("kind")) {
    if (!k->is_string()) throw ConfigError(name + ".kind must be a string");
    p.kind = policy_kind_from_name(k->get<std::string>());
  }
  s.get("checkpoint", p.checkpoint);
  s.get("stochastic", p.stochastic);
  if (const json* cf = s.child("car_following")) {
    Section x(*cf, name + ".car_following");
    x.get("accel_max", p.car_following.accel_max);
    x.get("decel_max", p.car_following.decel_max);
    x.get("tau", p.car_following.tau);
    x.get("v_desired", p.car_following.v_desired);
    x.get("lc_safety_gap", p.car_following.lc_safety_gap);
    x.get("lc_incentive_gain", p.car_following.lc_incentive_gain);
    x.get("lc_speed_threshold", p.car_following.lc_speed_threshold);
  }
  if (const json* fv = s.child("fvdm")) {
    Section x(*fv, name + ".fvdm");
    x.get("kappa", p.fvdm.kappa);
    x.get("lambda", p.fvdm.lam);
    x.get("v1", p.fvdm.v1);
    x.get("v2", p.fvdm.v2);
    x.get("c1", p.fvdm.c1);
    x.get("c2", p.fvdm.c2);
    x.get("l_c", p.fvdm.l_c);
  }
  if (const json* dr = s.child("dr")) {
    Section x(*dr, name + ".dr");
    x.get("v_lo", p.dr.v_lo);
    x.get("v_hi", p.dr.v_hi);
    x.get("tick", p.dr.tick);
    x.get("ramp_accel", p.dr.ramp_accel);
    x.get("traffic_guard", p.dr.traffic_guard);
  }
  if (const json* lc = s.child("lane_change")) {
    Section x(*lc, name + ".lane_change");
    x.get("duration", p.lane_change.duration);
    x.get("keep_gain", p.lane_change.keep_gain);
  }
  return p;
}

void read_train(const json& j, TrainConfig& t) {
  Section s(j, "train");
  s.get("beta", t.beta);
  s.get("gamma", t.gamma);
  read_ratio(s, t.sim_real_ratio);
  s.get("batch_size", t.batch_size);
  s.get("lr_actor", t.lr_actor);
  s.get("lr_critic", t.lr_critic);
  s.get("lr_alpha", t.lr_alpha);
  s.get("tau", t.tau);
  if (const json* a = s.child("entropy_alpha")) {
    if (a->is_string() && a->get<std::string>() == "auto") {
      t.auto_alpha = true;
    } else if (a->is_number()) {
      t.auto_alpha = false;
      t.alpha = a->get<double>();
    } else {
      throw ConfigError("train.entropy_alpha must be \"auto\" or a number");
    }
  }
  s.get("initial_alpha", t.alpha);
  s.get("reward_scale", t.reward_scale);
  s.get("hidden", t.hidden);
  s.get("total_steps", t.total_steps);
  s.get("steps_per_epoch", t.steps_per_epoch);
  s.get("warm_start", t.warm_start);
  s.get("updates_per_step", t.updates_per_step);
  s.get("sim_capacity", t.sim_capacity);
  s.get("real_capacity", t.real_capacity);
  s.get("eval_episodes", t.eval_episodes);
  s.get("eval_stochastic", t.eval_stochastic);
  s.get("log_interval", t.log_interval);
  s.get("seed", t.seed);
}

void check_edges(const std::vector<double>& e, const std::string& name) {
  try {
    (void)make_histogram(e);
  } catch (const ConfigError&) {
    throw ConfigError(name + " must be strictly increasing with at least two entries");
  }
}

}  // namespace

PolicySpec parse_policy_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed policy JSON: ") + e.what());
  }
  PolicySpec p = read_policy(j, "policy");
  validate(p);
  return p;
}

AppConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration JSON: ") + e.what());
  }
  AppConfig c;
  c.av.kind = PolicyKind::uniform;
  c.bv.kind = PolicyKind::fvdm;
  {
    Section root(j, "config");
    if (const json* x = root.child("env")) read_env(*x, c);
    if (const json* x = root.child("av")) c.av = read_policy(*x, "av");
    if (const json* x = root.child("bv")) c.bv = read_policy(*x, "bv");
    if (const json* x = root.child("ndd")) {
      Section s(*x, "ndd");
      s.get("v_min", c.ndd.filter.v_min);
      s.get("v_max", c.ndd.filter.v_max);
      s.get("a_min", c.ndd.filter.a_min);
      s.get("a_max", c.ndd.filter.a_max);
      s.get("proximity", c.ndd.proximity);
      s.get("min_frames", c.ndd.min_frames);
    }
    if (const json* x = root.child("synth")) {
      Section s(*x, "synth");
      s.get("clusters", c.synth.synth.clusters);
      s.get("min_vehicles", c.synth.synth.min_vehicles);
      s.get("max_vehicles", c.synth.synth.max_vehicles);
      s.get("frames", c.synth.synth.frames);
      s.get("v_mean", c.synth.synth.v_mean);
      s.get("v_sd", c.synth.synth.v_sd);
      s.get("lane_change_prob", c.synth.synth.lane_change_prob);
      s.get("min_gap", c.synth.synth.min_gap);
      s.get("seed", c.synth.seed);
    }
    if (const json* x = root.child("train")) read_train(*x, c.train);
    if (const json* x = root.child("finetune")) {
      Section s(*x, "finetune");
      s.get("phases", c.finetune.phases);
      s.get("phase_len", c.finetune.phase_len);
      s.get("eval_episodes", c.finetune.eval_episodes);
    }
    if (const json* x = root.child("eval")) {
      Section s(*x, "eval");
      s.get("episodes", c.eval.episodes);
      s.get("seeds", c.eval.seeds);
      s.get("bv_stochastic", c.eval.bv_stochastic);
      s.get("init", c.eval.init);
    }
    if (const json* x = root.child("report")) {
      Section s(*x, "report");
      s.get("following_edges", c.report.following_edges);
      s.get("lateral_edges", c.report.lateral_edges);
      s.get("collision_edges", c.report.collision_edges);
    }
  }
  c.ndd.filter.dt = c.env.dt;
  c.synth.synth.dt = c.env.dt;
  validate(c.env);
  validate(c.av);
  validate(c.bv);
  validate(c.train);
  if (c.eval.init != "ndd" && c.eval.init != "synthetic" && c.eval.init != "auto") {
    throw ConfigError("eval.init must be \"ndd\", \"synthetic\" or \"auto\"");
  }
  if (c.synthetic_init.n_bv < 1 || c.synthetic_init.n_bv > kMaxBvs) {
    throw ConfigError("env.n_bv must lie in [1, 4]");
  }
  if (c.eval.seeds.empty()) throw ConfigError("eval.seeds must not be empty");
  if (!(c.ndd.filter.v_min <= c.ndd.filter.v_max) || !(c.ndd.filter.a_min <= c.ndd.filter.a_max)) {
    throw ConfigError("ndd filter ranges are empty");
  }
  if (c.finetune.phase_len == 0) throw ConfigError("finetune.phase_len must be positive");
  check_edges(c.report.following_edges, "report.following_edges");
  check_edges(c.report.lateral_edges, "report.lateral_edges");
  check_edges(c.report.collision_edges, "report.collision_edges");
  return c;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

json policy_json(const PolicySpec& p) {
  return json{{"kind", std::string(policy_name(p.kind))},
              {"checkpoint", p.checkpoint},
              {"stochastic", p.stochastic},
              {"car_following",
               {{"accel_max", p.car_following.accel_max},
                {"decel_max", p.car_following.decel_max},
                {"tau", p.car_following.tau},
                {"v_desired", p.car_following.v_desired},
                {"lc_safety_gap", p.car_following.lc_safety_gap},
                {"lc_incentive_gain", p.car_following.lc_incentive_gain},
                {"lc_speed_threshold", p.car_following.lc_speed_threshold}}},
              {"fvdm",
               {{"kappa", p.fvdm.kappa},
                {"lambda", p.fvdm.lam},
                {"v1", p.fvdm.v1},
                {"v2", p.fvdm.v2},
                {"c1", p.fvdm.c1},
                {"c2", p.fvdm.c2},
                {"l_c", p.fvdm.l_c}}},
              {"dr",
               {{"v_lo", p.dr.v_lo},
                {"v_hi", p.dr.v_hi},
                {"tick", p.dr.tick},
                {"ramp_accel", p.dr.ramp_accel},
                {"traffic_guard", p.dr.traffic_guard}}},
              {"lane_change",
               {{"duration", p.lane_change.duration}, {"keep_gain", p.lane_change.keep_gain}}}};
}

}  // namespace

std::string dump_config(const AppConfig& c) {
  const TrainConfig& t = c.train;
  json ratio = std::isinf(t.sim_real_ratio) ? json("inf") : json(t.sim_real_ratio);
  json j{
      {"env",
       {{"dt", c.env.dt},
        {"horizon", c.env.horizon},
        {"reward_bonus", c.env.reward_bonus},
        {"v_max", c.env.v_max},
        {"accel_min", c.env.accel_min},
        {"accel_max", c.env.accel_max},
        {"dtheta_rate", c.env.dtheta_rate},
        {"vehicle_length", c.env.dims.length},
        {"vehicle_width", c.env.dims.width},
        {"lane_count", c.env.road.lane_count},
        {"lane_width", c.env.road.lane_width},
        {"road_length", c.env.road.length},
        {"n_bv", c.synthetic_init.n_bv},
        {"synthetic_init",
         {{"av_x_lo", c.synthetic_init.av_x_lo},
          {"av_x_hi", c.synthetic_init.av_x_hi},
          {"v_lo", c.synthetic_init.v_lo},
          {"v_hi", c.synthetic_init.v_hi},
          {"spread", c.synthetic_init.spread},
          {"min_clearance", c.synthetic_init.min_clearance}}}}},
      {"av", policy_json(c.av)},
      {"bv", policy_json(c.bv)},
      {"ndd",
       {{"v_min", c.ndd.filter.v_min},
        {"v_max", c.ndd.filter.v_max},
        {"a_min", c.ndd.filter.a_min},
        {"a_max", c.ndd.filter.a_max},
        {"proximity", c.ndd.proximity},
        {"min_frames", c.ndd.min_frames}}},
      {"synth",
       {{"clusters", c.synth.synth.clusters},
        {"min_vehicles", c.synth.synth.min_vehicles},
        {"max_vehicles", c.synth.synth.max_vehicles},
        {"frames", c.synth.synth.frames},
        {"v_mean", c.synth.synth.v_mean},
        {"v_sd", c.synth.synth.v_sd},
        {"lane_change_prob", c.synth.synth.lane_change_prob},
        {"min_gap", c.synth.synth.min_gap},
        {"seed", c.synth.seed}}},
      {"train",
       {{"beta", t.beta},
        {"gamma", t.gamma},
        {"sim_real_ratio", ratio},
        {"batch_size", t.batch_size},
        {"lr_actor", t.lr_actor},
        {"lr_critic", t.lr_critic},
        {"lr_alpha", t.lr_alpha},
        {"tau", t.tau},
        {"entropy_alpha", t.auto_alpha ? json("auto") : json(t.alpha)},
        {"initial_alpha", t.alpha},
        {"reward_scale", t.reward_scale},
        {"hidden", t.hidden},
        {"total_steps", t.total_steps},
        {"steps_per_epoch", t.steps_per_epoch},
        {"warm_start", t.warm_start},
        {"updates_per_step", t.updates_per_step},
        {"sim_capacity", t.sim_capacity},
        {"real_capacity", t.real_capacity},
        {"eval_episodes", t.eval_episodes},
        {"eval_stochastic", t.eval_stochastic},
        {"log_interval", t.log_interval},
        {"seed", t.seed}}},
      {"finetune",
       {{"phases", c.finetune.phases},
        {"phase_len", c.finetune.phase_len},
        {"eval_episodes", c.finetune.eval_episodes}}},
      {"eval",
       {{"episodes", c.eval.episodes},
        {"seeds", c.eval.seeds},
        {"bv_stochastic", c.eval.bv_stochastic},
        {"init", c.eval.init}}},
      {"report",
       {{"following_edges", c.report.following_edges},
        {"lateral_edges", c.report.lateral_edges},
        {"collision_edges", c.report.collision_edges}}}};
  return j.dump(2);
}

}  // namespace advscen

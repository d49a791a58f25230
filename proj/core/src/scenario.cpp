#include "advscen/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "advscen/errors.hpp"

namespace advscen {

std::string_view to_string(Event e) {
  switch (e) {
    case Event::none: return "none";
    case Event::av_collision: return "av_collision";
    case Event::bv_collision: return "bv_collision";
    case Event::road_departure: return "road_departure";
    case Event::horizon: return "horizon";
  }
  return "none";
}

Event event_from_string(std::string_view s) {
  for (Event e : {Event::none, Event::av_collision, Event::bv_collision, Event::road_departure,
                  Event::horizon}) {
    if (to_string(e) == s) return e;
  }
  throw ParseError("unknown event label '" + std::string(s) + "'", 0);
}

void check_scene_shape(const Scene& scene) {
  if (scene.bvs.size() != scene.bv_actions.size()) {
    throw StructuralError("scene has " + std::to_string(scene.bvs.size()) + " BV states but " +
                          std::to_string(scene.bv_actions.size()) + " BV actions");
  }
  if (scene.bvs.empty() || scene.bvs.size() > kMaxBvs) {
    throw StructuralError("scene must hold 1 to 4 BVs, got " + std::to_string(scene.bvs.size()));
  }
}

namespace {

void push_state(std::vector<double>& out, const VehicleState& s) {
  out.insert(out.end(), {s.x, s.y, s.v, s.theta});
}

VehicleState read_state(std::span<const double> v, std::size_t slot) {
  const std::size_t o = slot * kStateDim;
  return {v[o], v[o + 1], v[o + 2], v[o + 3]};
}

bool state_ok(const VehicleState& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.v) && s.v >= 0.0 &&
         std::isfinite(s.theta) && std::abs(s.theta) < std::numbers::pi / 2;
}

}  // namespace

std::vector<double> flatten_scene(const Scene& scene) {
  check_scene_shape(scene);
  std::vector<double> out;
  out.reserve(kStateDim * (scene.bvs.size() + 1));
  push_state(out, scene.av);
  for (const auto& bv : scene.bvs) push_state(out, bv);
  return out;
}

Scene unflatten_scene(std::span<const double> state) {
  if (state.size() % kStateDim != 0 || state.size() < 2 * kStateDim ||
      state.size() > kStateDim * (kMaxBvs + 1)) {
    throw StructuralError("flattened state of length " + std::to_string(state.size()) +
                          " is not 4*(N+1) with N in [1, 4]");
  }
  Scene scene;
  scene.av = read_state(state, 0);
  const std::size_t n = state.size() / kStateDim - 1;
  for (std::size_t i = 1; i <= n; ++i) scene.bvs.push_back(read_state(state, i));
  scene.bv_actions.assign(n, VehicleAction{});
  return scene;
}

std::vector<double> flatten_bv_actions(const Scene& scene) {
  check_scene_shape(scene);
  std::vector<double> out;
  out.reserve(kActionDim * scene.bv_actions.size());
  for (const auto& a : scene.bv_actions) out.insert(out.end(), {a.dv, a.dtheta});
  return out;
}

std::vector<VehicleAction> unflatten_actions(std::span<const double> actions) {
  if (actions.size() % kActionDim != 0) {
    throw StructuralError("flattened action length " + std::to_string(actions.size()) +
                          " is not a multiple of 2");
  }
  std::vector<VehicleAction> out;
  for (std::size_t i = 0; i < actions.size(); i += kActionDim) {
    out.push_back({actions[i], actions[i + 1]});
  }
  return out;
}

std::vector<std::string> validate_scenario(const Scenario& sc) {
  std::vector<std::string> report;
  if (!(sc.dt > 0.0)) report.emplace_back("non-positive frame interval");
  if (sc.frames.empty()) {
    report.emplace_back("empty scenario");
    return report;
  }
  const std::size_t n = sc.frames.front().bvs.size();
  for (std::size_t k = 0; k < sc.frames.size(); ++k) {
    const Scene& f = sc.frames[k];
    const std::string where = "frame " + std::to_string(k) + ": ";
    if (f.bvs.size() != f.bv_actions.size()) {
      report.push_back(where + "BV state/action count mismatch");
    }
    if (f.bvs.empty() || f.bvs.size() > kMaxBvs) {
      report.push_back(where + "BV count outside [1, 4]");
    }
    if (f.bvs.size() != n) report.push_back(where + "inconsistent vehicle count");
    if (f.t < 0) report.push_back(where + "negative frame index");
    if (k > 0 && f.t != sc.frames[k - 1].t + 1) {
      report.push_back(where + "frame index not consecutive");
    }
    if (!state_ok(f.av)) report.push_back(where + "invalid AV state");
    for (std::size_t i = 0; i < f.bvs.size(); ++i) {
      if (!state_ok(f.bvs[i])) report.push_back(where + "invalid state for BV " + std::to_string(i));
    }
  }
  return report;
}

std::vector<Transition> scenario_transitions(
    const Scenario& sc, const std::function<double(const Scene&, Event)>& reward) {
  std::vector<Transition> out;
  if (sc.frames.size() < 2) return out;
  out.reserve(sc.frames.size() - 1);
  for (std::size_t k = 0; k + 1 < sc.frames.size(); ++k) {
    const bool last = k + 2 == sc.frames.size();
    const Event ev = last ? sc.outcome : Event::none;
    Transition tr;
    tr.s = flatten_scene(sc.frames[k]);
    tr.a = flatten_bv_actions(sc.frames[k]);
    tr.r = reward(sc.frames[k + 1], ev);
    tr.s_next = flatten_scene(sc.frames[k + 1]);
    tr.done = last;
    out.push_back(std::move(tr));
  }
  return out;
}

namespace {

void put(std::ostream& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, " %.6f", v);
  out << buf;
}

void put_vehicle(std::ostream& out, const VehicleState& s, const VehicleAction& a) {
  put(out, s.x);
  put(out, s.y);
  put(out, s.v);
  put(out, s.theta);
  put(out, a.dv);
  put(out, a.dtheta);
}

}  // namespace

void write_scenario_log(const Scenario& sc, std::ostream& out) {
  const std::size_t n = sc.frames.empty() ? 0 : sc.frames.front().bvs.size();
  char head[128];
  std::snprintf(head, sizeof head, "# scenario v1 dt=%.6f n_bv=%zu outcome=", sc.dt, n);
  out << head << to_string(sc.outcome) << '\n';
  for (const Scene& f : sc.frames) {
    out << f.t;
    put_vehicle(out, f.av, f.av_action);
    for (std::size_t i = 0; i < f.bvs.size(); ++i) put_vehicle(out, f.bvs[i], f.bv_actions[i]);
    out << '\n';
  }
}

Scenario read_scenario_log(std::istream& in) {
  Scenario sc;
  std::string line;
  std::size_t lineno = 0;
  std::size_t n = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      char outcome[64] = {0};
      if (std::sscanf(line.c_str(), "# scenario v1 dt=%lf n_bv=%zu outcome=%63s", &sc.dt, &n,
                      outcome) != 3) {
        throw ParseError("malformed scenario header", lineno);
      }
      try {
        sc.outcome = event_from_string(outcome);
      } catch (const ParseError& e) {
        throw ParseError(e.what(), lineno);
      }
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError("frame line before header", lineno);
    std::istringstream fields(line);
    Scene f;
    if (!(fields >> f.t)) throw ParseError("missing frame index", lineno);
    auto read_vehicle = [&](VehicleState& s, VehicleAction& a) {
      if (!(fields >> s.x >> s.y >> s.v >> s.theta >> a.dv >> a.dtheta)) {
        throw ParseError("expected " + std::to_string(1 + 6 * (n + 1)) + " fields", lineno);
      }
    };
    read_vehicle(f.av, f.av_action);
    f.bvs.resize(n);
    f.bv_actions.resize(n);
    for (std::size_t i = 0; i < n; ++i) read_vehicle(f.bvs[i], f.bv_actions[i]);
    std::string extra;
    if (fields >> extra) throw ParseError("trailing field '" + extra + "'", lineno);
    sc.frames.push_back(std::move(f));
  }
  if (sc.frames.empty()) throw ParseError("empty scenario", lineno);
  return sc;
}

}  // namespace advscen

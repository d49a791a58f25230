#include "advscen/ndd.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "advscen/errors.hpp"

namespace advscen {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r' || cell.back() == '\t')) {
      cell.remove_suffix(1);
    }
    out.push_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_cell(std::string_view cell, std::string_view column, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    throw ParseError("cannot parse " + std::string(column) + " value '" + std::string(cell) + "'",
                     line);
  }
  return value;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

}  // namespace

std::vector<TrackRow> parse_tracks(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line != "\r") break;
  }
  if (line.empty()) throw ParseError("empty tracks file", lineno);

  const auto header = split_csv(line);
  constexpr std::array<std::string_view, 8> kRequired{"frame", "id",     "x",          "y",
                                                      "width", "height", "xVelocity", "laneId"};
  std::array<std::size_t, 8> col{};
  for (std::size_t i = 0; i < kRequired.size(); ++i) {
    const auto it = std::find(header.begin(), header.end(), kRequired[i]);
    if (it == header.end()) throw SchemaError(std::string(kRequired[i]));
    col[i] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<TrackRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() < header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()),
                       lineno);
    }
    TrackRow r;
    r.frame = parse_cell<long>(cells[col[0]], kRequired[0], lineno);
    r.vehicle_id = parse_cell<long>(cells[col[1]], kRequired[1], lineno);
    r.x = parse_cell<double>(cells[col[2]], kRequired[2], lineno);
    r.y = parse_cell<double>(cells[col[3]], kRequired[3], lineno);
    r.width = parse_cell<double>(cells[col[4]], kRequired[4], lineno);
    r.height = parse_cell<double>(cells[col[5]], kRequired[5], lineno);
    r.x_velocity = parse_cell<double>(cells[col[6]], kRequired[6], lineno);
    r.lane_id = parse_cell<int>(cells[col[7]], kRequired[7], lineno);
    if (r.frame < 0) throw ParseError("negative frame", lineno);
    if (!(r.width > 0 && r.height > 0)) throw ParseError("non-positive vehicle size", lineno);
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const TrackRow& a, const TrackRow& b) {
    return a.vehicle_id != b.vehicle_id ? a.vehicle_id < b.vehicle_id : a.frame < b.frame;
  });
  return rows;
}

void write_tracks_csv(const std::vector<TrackRow>& rows, std::ostream& out) {
  out << "frame,id,x,y,width,height,xVelocity,laneId\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%ld,%ld,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n", r.frame, r.vehicle_id,
                  r.x, r.y, r.width, r.height, r.x_velocity, r.lane_id);
    out << buf;
  }
}

std::vector<VehicleState> track_states(std::span<const TrackRow> track, double eps) {
  std::vector<VehicleState> out;
  out.reserve(track.size());
  for (const auto& r : track) {
    out.push_back({r.x + 0.5 * r.width, r.y + 0.5 * r.height, r.x_velocity, 0.0});
  }
  double theta = 0.0;
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (t + 1 < out.size()) {
      const double dx = out[t + 1].x - out[t].x;
      const double dy = out[t + 1].y - out[t].y;
      if (std::hypot(dx, dy) > eps) theta = std::atan2(dy, dx);
    }
    out[t].theta = theta;
  }
  return out;
}

std::vector<VehicleAction> derive_actions(std::span<const VehicleState> track) {
  if (track.size() < 2) throw StructuralError("derive_actions needs at least two frames");
  std::vector<VehicleAction> out;
  out.reserve(track.size() - 1);
  for (std::size_t t = 0; t + 1 < track.size(); ++t) {
    out.push_back({track[t + 1].v - track[t].v, track[t + 1].theta - track[t].theta});
  }
  return out;
}

Scene segment_scene(const Segment& seg, std::size_t k) {
  const auto av_it = std::find(seg.vehicle_ids.begin(), seg.vehicle_ids.end(), seg.av_id);
  if (av_it == seg.vehicle_ids.end()) throw StructuralError("segment AV id not among its vehicles");
  const std::size_t av = static_cast<std::size_t>(av_it - seg.vehicle_ids.begin());
  const bool has_action = k + 1 < seg.frame_count();
  Scene scene;
  scene.t = static_cast<long>(k);
  scene.av = seg.states.at(k)[av];
  if (has_action) scene.av_action = seg.actions[k][av];
  for (std::size_t i = 0; i < seg.vehicle_ids.size(); ++i) {
    if (i == av) continue;
    scene.bvs.push_back(seg.states[k][i]);
    scene.bv_actions.push_back(has_action ? seg.actions[k][i] : VehicleAction{});
  }
  return scene;
}

std::vector<Scene> head_frames(const std::vector<Segment>& segments) {
  std::vector<Scene> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(segment_scene(s, 0));
  return out;
}

bool filter_kinematics(const Segment& seg, const FilterSpec& spec) {
  for (const auto& frame : seg.states) {
    for (const auto& s : frame) {
      if (!within(s.v, spec.v_min, spec.v_max)) return false;
    }
  }
  for (const auto& frame : seg.actions) {
    for (const auto& a : frame) {
      if (!within(a.dv / spec.dt, spec.a_min, spec.a_max)) return false;
    }
  }
  return true;
}

namespace {

struct TrackPoint {
  VehicleState state;
  VehicleAction action;  // toward the next frame of the same track
  bool has_next = false;
};

// Components of the proximity graph that are complete and hold 2-5 vehicles.
std::vector<std::vector<long>> frame_groups(const std::vector<std::pair<long, VehicleState>>& cars,
                                            double proximity) {
  const std::size_t n = cars.size();
  std::vector<int> comp(n, -1);
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) {
    if (comp[i] >= 0) continue;
    comp[i] = static_cast<int>(members.size());
    members.push_back({i});
    for (std::size_t q = 0; q < members.back().size(); ++q) {
      const std::size_t a = members.back()[q];
      for (std::size_t b = 0; b < n; ++b) {
        if (comp[b] >= 0) continue;
        const double d = std::hypot(cars[a].second.x - cars[b].second.x,
                                    cars[a].second.y - cars[b].second.y);
        if (d < proximity) {
          comp[b] = comp[i];
          members.back().push_back(b);
        }
      }
    }
  }
  std::vector<std::vector<long>> groups;
  for (const auto& m : members) {
    if (m.size() < 2 || m.size() > kMaxBvs + 1) continue;
    bool complete = true;
    for (std::size_t i = 0; i < m.size() && complete; ++i) {
      for (std::size_t j = i + 1; j < m.size() && complete; ++j) {
        const auto& a = cars[m[i]].second;
        const auto& b = cars[m[j]].second;
        complete = std::hypot(a.x - b.x, a.y - b.y) < proximity;
      }
    }
    if (!complete) continue;
    std::vector<long> ids;
    for (std::size_t i : m) ids.push_back(cars[i].first);
    std::sort(ids.begin(), ids.end());
    groups.push_back(std::move(ids));
  }
  return groups;
}

}  // namespace

std::vector<Segment> extract_segments(const std::vector<TrackRow>& rows_in,
                                      const FilterSpec& filter, double proximity,
                                      std::size_t min_frames, ExtractStats* stats) {
  ExtractStats local;
  ExtractStats& st = stats ? *stats : local;
  st = {};

  std::vector<TrackRow> rows = rows_in;
  std::stable_sort(rows.begin(), rows.end(), [](const TrackRow& a, const TrackRow& b) {
    return a.vehicle_id != b.vehicle_id ? a.vehicle_id < b.vehicle_id : a.frame < b.frame;
  });

  // (vehicle, frame) -> state and action, from contiguous runs of each track.
  std::map<std::pair<long, long>, TrackPoint> points;
  std::map<long, std::vector<std::pair<long, VehicleState>>> by_frame;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i + 1;
    while (j < rows.size() && rows[j].vehicle_id == rows[i].vehicle_id &&
           rows[j].frame == rows[j - 1].frame + 1) {
      ++j;
    }
    const std::span<const TrackRow> run(rows.data() + i, j - i);
    const auto states = track_states(run);
    const auto actions = run.size() >= 2 ? derive_actions(states) : std::vector<VehicleAction>{};
    for (std::size_t k = 0; k < run.size(); ++k) {
      TrackPoint p{states[k], k < actions.size() ? actions[k] : VehicleAction{}, k < actions.size()};
      points[{run[k].vehicle_id, run[k].frame}] = p;
      by_frame[run[k].frame].push_back({run[k].vehicle_id, states[k]});
    }
    i = j;
  }

  // group -> frames at which it is a valid group
  std::map<std::vector<long>, std::vector<long>> group_frames;
  for (auto& [frame, cars] : by_frame) {
    std::sort(cars.begin(), cars.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& g : frame_groups(cars, proximity)) group_frames[std::move(g)].push_back(frame);
  }

  std::vector<Segment> out;
  for (const auto& [ids, frames] : group_frames) {
    for (std::size_t i = 0; i < frames.size();) {
      std::size_t j = i + 1;
      while (j < frames.size() && frames[j] == frames[j - 1] + 1) ++j;
      ++st.windows;
      const std::size_t len = j - i;
      if (len < min_frames) {
        ++st.rejected_short;
        i = j;
        continue;
      }
      Segment base;
      base.first_frame = frames[i];
      base.vehicle_ids = ids;
      for (std::size_t k = 0; k < len; ++k) {
        std::vector<VehicleState> fs;
        std::vector<VehicleAction> fa;
        for (long id : ids) {
          const TrackPoint& p = points.at({id, frames[i] + static_cast<long>(k)});
          fs.push_back(p.state);
          fa.push_back(p.action);
        }
        base.states.push_back(std::move(fs));
        if (k + 1 < len) base.actions.push_back(std::move(fa));
      }
      if (!filter_kinematics(base, filter)) {
        st.rejected_kinematics += ids.size();
        i = j;
        continue;
      }
      for (long av : ids) {
        Segment s = base;
        s.av_id = av;
        out.push_back(std::move(s));
        ++st.segments;
      }
      i = j;
    }
  }
  return out;
}

std::vector<Transition> build_transitions(const Segment& seg, const EnvConfig& cfg) {
  std::vector<Transition> out;
  if (seg.frame_count() < 2) return out;
  const ActionLimits lim = action_limits(cfg);
  Scene next = segment_scene(seg, 0);
  for (std::size_t k = 0; k + 1 < seg.frame_count(); ++k) {
    Scene cur = std::move(next);
    next = segment_scene(seg, k + 1);
    for (auto& a : cur.bv_actions) a = clamp_action(a, lim);
    Transition tr;
    tr.s = flatten_scene(cur);
    tr.a = flatten_bv_actions(cur);
    tr.r = bv_reward(next, Event::none, cfg);
    tr.s_next = flatten_scene(next);
    tr.done = k + 2 == seg.frame_count();
    out.push_back(std::move(tr));
  }
  return out;
}

void write_transitions(const std::vector<Transition>& transitions, std::ostream& out) {
  const std::size_t sd = transitions.empty() ? 0 : transitions.front().s.size();
  const std::size_t ad = transitions.empty() ? 0 : transitions.front().a.size();
  out << "# advscen-transitions v1 state_dim=" << sd << " action_dim=" << ad
      << " count=" << transitions.size() << '\n';
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (const auto& t : transitions) {
    if (t.s.size() != sd || t.s_next.size() != sd || t.a.size() != ad) {
      throw StructuralError("transition store needs uniform state/action dimensions");
    }
    bool first = true;
    auto sep = [&] {
      if (!first) out << ' ';
      first = false;
    };
    for (double v : t.s) sep(), put(v);
    for (double v : t.a) sep(), put(v);
    sep(), put(t.r);
    for (double v : t.s_next) sep(), put(v);
    sep();
    out << (t.done ? 1 : 0) << '\n';
  }
}

std::vector<Transition> read_transitions(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t sd = 0, ad = 0, count = 0;
  if (!std::getline(in, line)) throw ParseError("empty transition store", 1);
  ++lineno;
  if (std::sscanf(line.c_str(), "# advscen-transitions v1 state_dim=%zu action_dim=%zu count=%zu",
                  &sd, &ad, &count) != 3) {
    throw ParseError("missing or unsupported transition store header", lineno);
  }
  std::vector<Transition> out;
  out.reserve(count);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    Transition t;
    t.s.resize(sd);
    t.a.resize(ad);
    t.s_next.resize(sd);
    int done = 0;
    bool ok = true;
    for (double& v : t.s) ok = ok && static_cast<bool>(fields >> v);
    for (double& v : t.a) ok = ok && static_cast<bool>(fields >> v);
    ok = ok && static_cast<bool>(fields >> t.r);
    for (double& v : t.s_next) ok = ok && static_cast<bool>(fields >> v);
    ok = ok && static_cast<bool>(fields >> done) && (done == 0 || done == 1);
    std::string extra;
    if (!ok || (fields >> extra)) throw ParseError("malformed transition record", lineno);
    t.done = done == 1;
    out.push_back(std::move(t));
  }
  if (out.size() != count) {
    throw ParseError("store declares " + std::to_string(count) + " records but holds " +
                         std::to_string(out.size()),
                     lineno);
  }
  return out;
}

// --- synthetic corpus -----------------------------------------------------------

namespace {

struct SynthCar {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double v0 = 0.0;
  int lane = 0;
  // Lane change in progress: lateral cosine profile from y_from to y_to.
  long lc_start = -1;
  double y_from = 0.0;
  double y_to = 0.0;
  int lc_target = 0;
};

constexpr double kIdmAccel = 1.0;
constexpr double kIdmDecel = 2.0;
constexpr double kIdmMinGap = 12.0;
constexpr double kIdmHeadway = 0.6;
constexpr double kLaneChangeTime = 5.0;

bool occupies(const SynthCar& c, int lane) {
  return c.lane == lane || (c.lc_start >= 0 && c.lc_target == lane);
}

double idm_accel(const SynthCar& me, const std::vector<SynthCar>& cars, std::size_t self,
                 const VehicleDims& dims) {
  double gap = 1e9, lead_v = me.v;
  for (std::size_t k = 0; k < cars.size(); ++k) {
    if (k == self) continue;
    const SynthCar& o = cars[k];
    const bool shares = occupies(o, me.lane) || (me.lc_start >= 0 && occupies(o, me.lc_target));
    if (!shares || o.x <= me.x) continue;
    const double g = o.x - me.x - dims.length;
    if (g < gap) {
      gap = g;
      lead_v = o.v;
    }
  }
  const double s_star = kIdmMinGap + me.v * kIdmHeadway +
                        me.v * (me.v - lead_v) / (2.0 * std::sqrt(kIdmAccel * kIdmDecel));
  const double free = 1.0 - std::pow(me.v / me.v0, 4.0);
  const double a = kIdmAccel * (free - std::pow(std::max(s_star, 0.0) / std::max(gap, 0.1), 2.0));
  return std::clamp(a, -3.0, 1.5);
}

// Generates one cluster; returns false when a post-check fails.
bool synth_cluster(const SynthConfig& cfg, const RoadConfig& road, const VehicleDims& dims,
                   Rng& rng, long frame0, long& next_id, std::vector<TrackRow>& rows) {
  std::uniform_int_distribution<std::size_t> count_dist(cfg.min_vehicles, cfg.max_vehicles);
  std::uniform_int_distribution<int> lane_dist(0, road.lane_count - 1);
  std::normal_distribution<double> speed_dist(cfg.v_mean, cfg.v_sd);
  const std::size_t n = count_dist(rng);
  const double base_v = std::clamp(speed_dist(rng), 18.0, 34.0);

  std::vector<SynthCar> cars;
  for (std::size_t i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      SynthCar c;
      c.lane = lane_dist(rng);
      c.x = 100.0 + uniform(rng, 0.0, 40.0);
      c.y = road.lane_center(c.lane);
      c.v0 = base_v + uniform(rng, -0.5, 0.5);
      c.v = c.v0;
      placed = std::all_of(cars.begin(), cars.end(), [&](const SynthCar& o) {
        return o.lane != c.lane || std::abs(o.x - c.x) - dims.length >= 15.0;
      });
      if (placed) cars.push_back(c);
    }
    if (!placed) return false;
  }

  const long lc_frames = std::lround(kLaneChangeTime / cfg.dt);
  long lc_frame = -1;
  std::size_t lc_car = 0;
  if (std::bernoulli_distribution(cfg.lane_change_prob)(rng) &&
      static_cast<long>(cfg.frames) > lc_frames + 50) {
    lc_car = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    lc_frame = std::uniform_int_distribution<long>(25, static_cast<long>(cfg.frames) - lc_frames - 1)(rng);
  }
  const int lc_dir = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;

  std::vector<std::vector<SynthCar>> history;
  history.reserve(cfg.frames);
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    const long t = static_cast<long>(f);
    if (t == lc_frame) {
      SynthCar& c = cars[lc_car];
      int target = c.lane + lc_dir;
      if (target < 0 || target >= road.lane_count) target = c.lane - lc_dir;
      const bool clear = std::all_of(cars.begin(), cars.end(), [&](const SynthCar& o) {
        return &o == &c || o.lane != target || std::abs(o.x - c.x) - dims.length >= 20.0;
      });
      if (clear) {
        c.lc_start = t;
        c.lc_target = target;
        c.y_from = c.y;
        c.y_to = road.lane_center(target);
      }
    }
    history.push_back(cars);
    std::vector<double> acc(n);
    for (std::size_t i = 0; i < n; ++i) acc[i] = idm_accel(cars[i], cars, i, dims);
    for (std::size_t i = 0; i < n; ++i) {
      SynthCar& c = cars[i];
      c.x += c.v * cfg.dt;
      c.v = std::max(0.0, c.v + acc[i] * cfg.dt);
      if (c.lc_start >= 0) {
        const double tau = static_cast<double>(t + 1 - c.lc_start) / static_cast<double>(lc_frames);
        if (tau >= 1.0) {
          c.y = c.y_to;
          c.lane = c.lc_target;
          c.lc_start = -1;
        } else {
          c.y = c.y_from + (c.y_to - c.y_from) * 0.5 * (1.0 - std::cos(std::numbers::pi * tau));
        }
      }
    }
  }

  // Post-checks: speeds, accelerations, bumper gaps between laterally overlapping cars.
  for (std::size_t f = 0; f < history.size(); ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      const SynthCar& c = history[f][i];
      if (c.v < 0.0 || c.v > 40.0) return false;
      if (f + 1 < history.size()) {
        const double a = (history[f + 1][i].v - c.v) / cfg.dt;
        if (a < -0.8 * kGravity + 0.01 || a > 0.6 * kGravity - 0.01) return false;
      }
      for (std::size_t j = i + 1; j < n; ++j) {
        const SynthCar& o = history[f][j];
        if (std::abs(o.y - c.y) < dims.width && std::abs(o.x - c.x) - dims.length < cfg.min_gap) {
          return false;
        }
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const long id = next_id++;
    for (std::size_t f = 0; f < history.size(); ++f) {
      const SynthCar& c = history[f][i];
      rows.push_back({frame0 + static_cast<long>(f), id, c.x - 0.5 * dims.length,
                      c.y - 0.5 * dims.width, dims.length, dims.width, c.v, road.lane_of(c.y) + 1});
    }
  }
  return true;
}

}  // namespace

std::vector<TrackRow> synth_ndd(const SynthConfig& cfg, const RoadConfig& road,
                                const VehicleDims& dims, Rng& rng) {
  if (cfg.min_vehicles < 2 || cfg.max_vehicles > kMaxBvs + 1 || cfg.min_vehicles > cfg.max_vehicles) {
    throw ConfigError("synthetic clusters must hold 2 to 5 vehicles");
  }
  if (cfg.frames < 2 || !(cfg.dt > 0)) throw ConfigError("synthetic clusters need >= 2 frames");
  std::vector<TrackRow> rows;
  long next_id = 1;
  for (std::size_t c = 0; c < cfg.clusters; ++c) {
    const long frame0 = static_cast<long>(c * (cfg.frames + 10));
    int attempts = 0;
    while (true) {
      std::vector<TrackRow> cluster;
      long id = next_id;
      if (synth_cluster(cfg, road, dims, rng, frame0, id, cluster)) {
        next_id = id;
        rows.insert(rows.end(), cluster.begin(), cluster.end());
        break;
      }
      if (++attempts > 1000) throw ConfigError("synthetic generator cannot satisfy its constraints");
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const TrackRow& a, const TrackRow& b) {
    return a.vehicle_id != b.vehicle_id ? a.vehicle_id < b.vehicle_id : a.frame < b.frame;
  });
  return rows;
}

}  // namespace advscen

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "advscen/random.hpp"
#include "advscen/scenario.hpp"
#include "advscen/traffic_sim.hpp"

namespace advscen {

/// One row of a HighD-style tracks file. x/y are the upper-left corner of the
/// bounding box; width is the longitudinal extent, height the lateral one.
struct TrackRow {
  long frame = 0;
  long vehicle_id = 0;
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;
  double x_velocity = 0.0;
  int lane_id = 0;

  bool operator==(const TrackRow&) const = default;
};

/// Reads comma-separated rows; the header must name frame, id, x, y, width,
/// height, xVelocity and laneId (other columns are ignored). Rows come back
/// sorted by (vehicle_id, frame). Throws SchemaError / ParseError.
std::vector<TrackRow> parse_tracks(std::istream& in);
void write_tracks_csv(const std::vector<TrackRow>& rows, std::ostream& out);

/// Closed acceptance ranges for speed and per-frame acceleration.
struct FilterSpec {
  double v_min = 0.0;
  double v_max = 40.0;
  double a_min = -0.8 * kGravity;
  double a_max = 0.6 * kGravity;
  double dt = 0.04;
};

/// Headings from successive displacements (held when the displacement is under
/// `eps`) for a contiguous track of centre positions.
std::vector<VehicleState> track_states(std::span<const TrackRow> track, double eps = 1e-3);

/// dv_t = v_{t+1} - v_t, dtheta_t = theta_{t+1} - theta_t for every frame but
/// the last. Throws StructuralError on tracks shorter than two frames.
std::vector<VehicleAction> derive_actions(std::span<const VehicleState> track);

/// A contiguous window over which a group of 2-5 vehicles stays mutually close.
struct Segment {
  long first_frame = 0;
  std::vector<long> vehicle_ids;  ///< ascending
  long av_id = 0;
  /// states[frame][vehicle], vehicle order as in vehicle_ids.
  std::vector<std::vector<VehicleState>> states;
  /// actions[frame][vehicle] for every frame but the last.
  std::vector<std::vector<VehicleAction>> actions;

  std::size_t frame_count() const { return states.size(); }
  std::size_t bv_count() const { return vehicle_ids.size() - 1; }
};

/// Scene at segment frame k: AV in slot 0, BVs in ascending id order, with the
/// recorded actions when k is not the last frame.
Scene segment_scene(const Segment& seg, std::size_t k);
std::vector<Scene> head_frames(const std::vector<Segment>& segments);

bool filter_kinematics(const Segment& seg, const FilterSpec& spec);

struct ExtractStats {
  std::size_t windows = 0;              ///< candidate group windows found
  std::size_t rejected_short = 0;       ///< windows under min_frames
  std::size_t rejected_kinematics = 0;  ///< segments failing the filter
  std::size_t segments = 0;             ///< segments emitted
};

/// Per frame, groups are connected components of the "centre distance <
/// proximity" graph that are complete and hold 2-5 vehicles. Each maximal run
/// of frames for the same group with at least `min_frames` frames yields one
/// segment per choice of AV. Segments failing the kinematic filter are dropped.
std::vector<Segment> extract_segments(const std::vector<TrackRow>& rows, const FilterSpec& filter,
                                      double proximity = 50.0, std::size_t min_frames = 10,
                                      ExtractStats* stats = nullptr);

/// One transition per frame pair; rewards relabelled with bv_reward on the
/// next frame (no collision term), heading increments clamped to the action
/// limits, done on the last transition.
std::vector<Transition> build_transitions(const Segment& seg, const EnvConfig& cfg);

/// Line-delimited transition store with a version header.
void write_transitions(const std::vector<Transition>& transitions, std::ostream& out);
/// Throws ParseError with the line number on malformed input.
std::vector<Transition> read_transitions(std::istream& in);

/// Synthetic naturalistic traffic on a three-lane road: clusters of cars in
/// IDM car-following with occasional smooth lane changes. Clusters occupy
/// disjoint frame ranges. Every cluster is regenerated until it passes the
/// kinematic filter and keeps bumper gaps of at least min_gap.
struct SynthConfig {
  std::size_t clusters = 100;
  std::size_t min_vehicles = 2;
  std::size_t max_vehicles = 2;
  std::size_t frames = 250;
  double v_mean = 27.0;
  double v_sd = 2.5;
  double lane_change_prob = 0.3;  ///< chance that a cluster contains one lane change
  double min_gap = 8.0;           ///< m, bumper gap between laterally overlapping cars
  double dt = 0.04;
};

std::vector<TrackRow> synth_ndd(const SynthConfig& cfg, const RoadConfig& road,
                                const VehicleDims& dims, Rng& rng);

}  // namespace advscen

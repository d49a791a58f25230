#pragma once

#include <array>

#include "advscen/scenario.hpp"

namespace advscen {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct VehicleDims {
  double length = 5.0;  ///< m, along heading
  double width = 2.0;   ///< m
};

/// Rectangle centred at `center`, rotated by `angle` from +x.
struct OrientedRect {
  Vec2 center;
  double half_len = 0.0;
  double half_wid = 0.0;
  double angle = 0.0;

  /// Counter-clockwise starting at the front-left corner.
  std::array<Vec2, 4> corners() const;
};

OrientedRect footprint(const VehicleState& state, const VehicleDims& dims);

/// Separating-axis test over the four edge normals. Touching counts as overlap.
bool rect_overlap(const OrientedRect& a, const OrientedRect& b);

/// 0 when the rectangles overlap, otherwise the smallest boundary-to-boundary distance.
double rect_min_distance(const OrientedRect& a, const OrientedRect& b);

/// Distance between segments [p0, p1] and [q0, q1].
double segment_distance(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1);

}  // namespace advscen

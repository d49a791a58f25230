#include "advscen/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace advscen {

namespace {

Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

bool segments_intersect(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  const double d1 = cross(p1 - p0, q0 - p0);
  const double d2 = cross(p1 - p0, q1 - p0);
  const double d3 = cross(q1 - q0, p0 - q0);
  const double d4 = cross(q1 - q0, p1 - q0);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

// Projection interval of a rectangle on a unit axis.
std::pair<double, double> project(const OrientedRect& r, Vec2 axis) {
  const double c = dot(r.center, axis);
  const Vec2 u{std::cos(r.angle), std::sin(r.angle)};
  const Vec2 w{-u.y, u.x};
  const double extent = r.half_len * std::abs(dot(u, axis)) + r.half_wid * std::abs(dot(w, axis));
  return {c - extent, c + extent};
}

}  // namespace

std::array<Vec2, 4> OrientedRect::corners() const {
  const Vec2 u{std::cos(angle), std::sin(angle)};
  const Vec2 w{-u.y, u.x};
  const Vec2 l = half_len * u;
  const Vec2 h = half_wid * w;
  return {center + l + h, center - l + h, center - l - h, center + l - h};
}

OrientedRect footprint(const VehicleState& state, const VehicleDims& dims) {
  return {{state.x, state.y}, 0.5 * dims.length, 0.5 * dims.width, state.theta};
}

bool rect_overlap(const OrientedRect& a, const OrientedRect& b) {
  for (const OrientedRect* r : {&a, &b}) {
    const Vec2 u{std::cos(r->angle), std::sin(r->angle)};
    for (Vec2 axis : {u, Vec2{-u.y, u.x}}) {
      const auto [a_lo, a_hi] = project(a, axis);
      const auto [b_lo, b_hi] = project(b, axis);
      if (a_hi < b_lo || b_hi < a_lo) return false;
    }
  }
  return true;
}

double segment_distance(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  if (segments_intersect(p0, p1, q0, q1)) return 0.0;
  return std::min({point_segment_distance(p0, q0, q1), point_segment_distance(p1, q0, q1),
                   point_segment_distance(q0, p0, p1), point_segment_distance(q1, p0, p1)});
}

double rect_min_distance(const OrientedRect& a, const OrientedRect& b) {
  if (rect_overlap(a, b)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      best = std::min(best, segment_distance(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4]));
    }
  }
  return best;
}

}  // namespace advscen

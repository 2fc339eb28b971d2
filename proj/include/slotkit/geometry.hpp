#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace slotkit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Point2& o) const = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
inline double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Point2& a) { return std::hypot(a.x, a.y); }

enum class SlotType { kPerpendicular, kParallel, kDiagonal };

SlotType slot_type_from_string(const std::string& s);
std::string to_string(SlotType t);

// Area below this (in squared working units) counts as degenerate.
constexpr double kDegenerateArea = 1e-9;

// Four-corner parking slot. Storage order is fixed:
// [entrance-left, entrance-right, ending-left, ending-right].
// The boundary polygon is traversed entrance-left -> entrance-right ->
// ending-right -> ending-left; the entrance and ending lines are opposite
// edges of that quadrilateral.
struct PolygonSlot {
  std::array<Point2, 4> corners{};  // EL, ER, EnL, EnR
  SlotType slot_type = SlotType::kPerpendicular;
  double confidence = 1.0;

  const Point2& entrance_left() const { return corners[0]; }
  const Point2& entrance_right() const { return corners[1]; }
  const Point2& ending_left() const { return corners[2]; }
  const Point2& ending_right() const { return corners[3]; }

  // Corners in boundary-traversal order.
  std::array<Point2, 4> traversal() const {
    return {corners[0], corners[1], corners[3], corners[2]};
  }
};

// Center-plus-offsets form, same corner order as PolygonSlot.
struct RelativeSlot {
  Point2 center{};
  std::array<Point2, 4> offsets{};
  SlotType slot_type = SlotType::kPerpendicular;
  double confidence = 1.0;
};

// Signed area of the traversal polygon (positive when counterclockwise).
double signed_area(const PolygonSlot& slot);

// Absolute traversal-polygon area.
double area(const PolygonSlot& slot);

// Mean of the four corners.
Point2 centroid(const PolygonSlot& slot);

// True iff no two non-adjacent traversal edges intersect and area is
// non-degenerate.
bool is_simple(const PolygonSlot& slot);

// Throws std::invalid_argument when the slot violates its invariants
// (non-finite corner, self-intersection, degenerate area).
void validate(const PolygonSlot& slot);

// Center = arithmetic mean of corners, offsets = corner - center.
// Throws on degenerate input.
RelativeSlot to_relative(const PolygonSlot& slot);

// Inverse of to_relative. Throws when the reconstruction is degenerate or
// self-intersecting.
PolygonSlot from_relative(const RelativeSlot& rel);

// Signed angle in degrees, (-180, 180], between the entrance direction
// (entrance-left -> entrance-right) and the +x axis, counterclockwise
// positive. Throws when the entrance corners coincide.
double entrance_angle(const PolygonSlot& slot);

// Segment intersection test, endpoints included.
bool segments_intersect(const Point2& a0, const Point2& a1,
                        const Point2& b0, const Point2& b1);

}  // namespace slotkit

#include "slotkit/geometry.hpp"

#include <algorithm>

namespace slotkit {

SlotType slot_type_from_string(const std::string& s) {
  if (s == "perpendicular") return SlotType::kPerpendicular;
  if (s == "parallel") return SlotType::kParallel;
  if (s == "diagonal") return SlotType::kDiagonal;
  throw std::invalid_argument("unknown slot type: '" + s + "'");
}

std::string to_string(SlotType t) {
  switch (t) {
    case SlotType::kPerpendicular: return "perpendicular";
    case SlotType::kParallel: return "parallel";
    case SlotType::kDiagonal: return "diagonal";
  }
  throw std::logic_error("bad SlotType");
}

double signed_area(const PolygonSlot& slot) {
  const auto p = slot.traversal();
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) acc += cross(p[i], p[(i + 1) % 4]);
  return 0.5 * acc;
}

double area(const PolygonSlot& slot) { return std::abs(signed_area(slot)); }

Point2 centroid(const PolygonSlot& slot) {
  Point2 c{};
  for (const auto& p : slot.corners) c = c + p;
  return c * 0.25;
}

namespace {

int orientation(const Point2& a, const Point2& b, const Point2& c) {
  const double v = cross(b - a, c - a);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool on_segment(const Point2& a, const Point2& b, const Point2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(const Point2& a0, const Point2& a1,
                        const Point2& b0, const Point2& b1) {
  const int o1 = orientation(a0, a1, b0);
  const int o2 = orientation(a0, a1, b1);
  const int o3 = orientation(b0, b1, a0);
  const int o4 = orientation(b0, b1, a1);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a0, a1, b0)) return true;
  if (o2 == 0 && on_segment(a0, a1, b1)) return true;
  if (o3 == 0 && on_segment(b0, b1, a0)) return true;
  if (o4 == 0 && on_segment(b0, b1, a1)) return true;
  return false;
}

bool is_simple(const PolygonSlot& slot) {
  for (const auto& p : slot.corners)
    if (!p.finite()) return false;
  if (area(slot) <= kDegenerateArea) return false;
  const auto p = slot.traversal();
  // Only the two opposite edge pairs can cross in a quadrilateral.
  if (segments_intersect(p[0], p[1], p[2], p[3])) return false;
  if (segments_intersect(p[1], p[2], p[3], p[0])) return false;
  return true;
}

void validate(const PolygonSlot& slot) {
  for (const auto& p : slot.corners)
    if (!p.finite()) throw std::invalid_argument("slot corner is not finite");
  if (area(slot) <= kDegenerateArea)
    throw std::invalid_argument("degenerate slot: area below threshold");
  if (!is_simple(slot))
    throw std::invalid_argument("slot polygon is self-intersecting");
}

RelativeSlot to_relative(const PolygonSlot& slot) {
  validate(slot);
  RelativeSlot rel;
  rel.center = centroid(slot);
  for (int i = 0; i < 4; ++i) rel.offsets[i] = slot.corners[i] - rel.center;
  rel.slot_type = slot.slot_type;
  rel.confidence = slot.confidence;
  return rel;
}

PolygonSlot from_relative(const RelativeSlot& rel) {
  PolygonSlot slot;
  for (int i = 0; i < 4; ++i) slot.corners[i] = rel.center + rel.offsets[i];
  slot.slot_type = rel.slot_type;
  slot.confidence = rel.confidence;
  validate(slot);
  return slot;
}

double entrance_angle(const PolygonSlot& slot) {
  const Point2 d = slot.entrance_right() - slot.entrance_left();
  if (norm(d) < 1e-12)
    throw std::invalid_argument("entrance corners coincide");
  return std::atan2(d.y, d.x) * 180.0 / M_PI;
}

}  // namespace slotkit

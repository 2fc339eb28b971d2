#pragma once

#include <vector>

#include "slotkit/geometry.hpp"

namespace slotkit {

// Denominator guard used by every IoU/GIoU ratio in this module. Applied to
// denominators only, so values stay finite (and gradients bounded) when a
// corner box collapses to zero area.
constexpr double kAreaEps = 1e-9;

// Axis-aligned box. Zero-area boxes are valid (a corner box degenerates to a
// segment or point when the corner shares a coordinate with the centroid).
struct AxisBox {
  Point2 min_corner{};
  Point2 max_corner{};

  double width() const { return max_corner.x - min_corner.x; }
  double height() const { return max_corner.y - min_corner.y; }
  double area() const { return width() * height(); }
};

// Throws when min/max are out of order or non-finite.
void validate(const AxisBox& box);

// |A n B| / (|A| + |B| - |A n B| + eps), in [0, 1].
double box_iou(const AxisBox& a, const AxisBox& b);

// IoU - |C \ (A u B)| / (|C| + eps), where C is the smallest axis-aligned box
// enclosing both. In (-1, 1].
double box_giou(const AxisBox& a, const AxisBox& b);

// Box spanned by a polygon center and one of its corners (componentwise
// min/max of the two points).
AxisBox corner_box(const Point2& center, const Point2& corner);

// Mean over the four corner-box GIoUs; each slot uses its own vertex
// centroid unless an explicit center is supplied for the prediction (the
// form a detection head regresses). Not symmetric in its arguments.
double polygon_corner_giou(const PolygonSlot& pred, const PolygonSlot& gt);
double polygon_corner_giou(const PolygonSlot& pred, const Point2& pred_center,
                           const PolygonSlot& gt);

// Convex polygon (counterclockwise) as a point list.
using PointList = std::vector<Point2>;

// Shoelace area, absolute value.
double polygon_area(const PointList& poly);

// Sutherland-Hodgman clip of `subject` against convex `clip` (both convex,
// counterclockwise). Returns the intersection polygon (possibly empty).
PointList clip_convex(const PointList& subject, const PointList& clip);

// Convex hull of a point set (counterclockwise, no collinear duplicates).
PointList convex_hull(PointList points);

bool is_convex_quad(const PolygonSlot& slot);

// Exact area(A n B) / area(A u B). Convex pairs go through polygon clipping;
// a non-convex (but simple) input falls back to rasterization over the joint
// bounding box.
double polygon_iou_exact(const PolygonSlot& a, const PolygonSlot& b);

// polygon_iou_exact - |H \ (A u B)| / |H| with H the convex hull of both
// vertex sets. An axis-aligned enclosure can be selected instead for
// comparison experiments.
enum class Enclosure { kConvexHull, kAxisAligned };
double polygon_giou_exact(const PolygonSlot& a, const PolygonSlot& b,
                          Enclosure enclosure = Enclosure::kConvexHull);

// Grid-sampling IoU estimate, used as the validation oracle for the exact
// path. `resolution` samples per axis over the joint bounding box.
double polygon_iou_raster(const PolygonSlot& a, const PolygonSlot& b,
                          int resolution = 2048);

}  // namespace slotkit

#include "slotkit/iou.hpp"

#include <algorithm>

namespace slotkit {

void validate(const AxisBox& box) {
  if (!box.min_corner.finite() || !box.max_corner.finite())
    throw std::invalid_argument("box corner is not finite");
  if (box.min_corner.x > box.max_corner.x || box.min_corner.y > box.max_corner.y)
    throw std::invalid_argument("box min/max corners out of order");
}

namespace {

double intersection_area(const AxisBox& a, const AxisBox& b) {
  const double w = std::min(a.max_corner.x, b.max_corner.x) -
                   std::max(a.min_corner.x, b.min_corner.x);
  const double h = std::min(a.max_corner.y, b.max_corner.y) -
                   std::max(a.min_corner.y, b.min_corner.y);
  return std::max(0.0, w) * std::max(0.0, h);
}

AxisBox enclosure_box(const AxisBox& a, const AxisBox& b) {
  return {{std::min(a.min_corner.x, b.min_corner.x),
           std::min(a.min_corner.y, b.min_corner.y)},
          {std::max(a.max_corner.x, b.max_corner.x),
           std::max(a.max_corner.y, b.max_corner.y)}};
}

}  // namespace

double box_iou(const AxisBox& a, const AxisBox& b) {
  validate(a);
  validate(b);
  const double inter = intersection_area(a, b);
  return inter / (a.area() + b.area() - inter + kAreaEps);
}

double box_giou(const AxisBox& a, const AxisBox& b) {
  validate(a);
  validate(b);
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double c = enclosure_box(a, b).area();
  return inter / (uni + kAreaEps) - (c - uni) / (c + kAreaEps);
}

AxisBox corner_box(const Point2& center, const Point2& corner) {
  return {{std::min(center.x, corner.x), std::min(center.y, corner.y)},
          {std::max(center.x, corner.x), std::max(center.y, corner.y)}};
}

double polygon_corner_giou(const PolygonSlot& pred, const PolygonSlot& gt) {
  return polygon_corner_giou(pred, centroid(pred), gt);
}

double polygon_corner_giou(const PolygonSlot& pred, const Point2& pred_center,
                           const PolygonSlot& gt) {
  validate(pred);
  validate(gt);
  const Point2 gt_center = centroid(gt);
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    acc += box_giou(corner_box(pred_center, pred.corners[i]),
                    corner_box(gt_center, gt.corners[i]));
  }
  return acc * 0.25;
}

double polygon_area(const PointList& poly) {
  double acc = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) acc += cross(poly[i], poly[(i + 1) % n]);
  return std::abs(acc) * 0.5;
}

namespace {

double signed_area(const PointList& poly) {
  double acc = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) acc += cross(poly[i], poly[(i + 1) % n]);
  return acc * 0.5;
}

PointList to_ccw(PointList poly) {
  if (signed_area(poly) < 0) std::reverse(poly.begin(), poly.end());
  return poly;
}

}  // namespace

PointList clip_convex(const PointList& subject, const PointList& clip) {
  PointList output = subject;
  const size_t n = clip.size();
  for (size_t i = 0; i < n && !output.empty(); ++i) {
    const Point2& ca = clip[i];
    const Point2& cb = clip[(i + 1) % n];
    PointList input;
    input.swap(output);
    const size_t m = input.size();
    for (size_t j = 0; j < m; ++j) {
      const Point2& p = input[j];
      const Point2& q = input[(j + 1) % m];
      const double sp = cross(cb - ca, p - ca);
      const double sq = cross(cb - ca, q - ca);
      if (sp >= 0) output.push_back(p);
      if ((sp > 0 && sq < 0) || (sp < 0 && sq > 0)) {
        const double t = sp / (sp - sq);
        output.push_back(p + (q - p) * t);
      }
    }
  }
  return output;
}

PointList convex_hull(PointList pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  PointList hull(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const size_t lower = k + 1;
  for (size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool is_convex_quad(const PolygonSlot& slot) {
  const auto p = slot.traversal();
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const double c = cross(p[(i + 1) % 4] - p[i], p[(i + 2) % 4] - p[(i + 1) % 4]);
    if (c == 0) continue;
    const int s = c > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return sign != 0;
}

namespace {

bool point_in_polygon(const PointList& poly, const Point2& p) {
  bool inside = false;
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = poly[i];
    const Point2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

PointList traversal_list(const PolygonSlot& slot) {
  const auto t = slot.traversal();
  return PointList(t.begin(), t.end());
}

}  // namespace

double polygon_iou_raster(const PolygonSlot& a, const PolygonSlot& b,
                          int resolution) {
  const PointList pa = traversal_list(a);
  const PointList pb = traversal_list(b);
  double min_x = pa[0].x, max_x = pa[0].x, min_y = pa[0].y, max_y = pa[0].y;
  for (const auto& pts : {pa, pb}) {
    for (const auto& p : pts) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  const double dx = (max_x - min_x) / resolution;
  const double dy = (max_y - min_y) / resolution;
  long long inter = 0, uni = 0;
  for (int iy = 0; iy < resolution; ++iy) {
    const double y = min_y + (iy + 0.5) * dy;
    for (int ix = 0; ix < resolution; ++ix) {
      const Point2 p{min_x + (ix + 0.5) * dx, y};
      const bool ina = point_in_polygon(pa, p);
      const bool inb = point_in_polygon(pb, p);
      inter += ina && inb;
      uni += ina || inb;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double polygon_iou_exact(const PolygonSlot& a, const PolygonSlot& b) {
  validate(a);
  validate(b);
  if (!is_convex_quad(a) || !is_convex_quad(b))
    return polygon_iou_raster(a, b);
  const PointList pa = to_ccw(traversal_list(a));
  const PointList pb = to_ccw(traversal_list(b));
  const PointList inter_poly = clip_convex(pa, pb);
  const double inter = inter_poly.size() >= 3 ? polygon_area(inter_poly) : 0.0;
  const double uni = polygon_area(pa) + polygon_area(pb) - inter;
  return uni <= 0 ? 0.0 : inter / uni;
}

double polygon_giou_exact(const PolygonSlot& a, const PolygonSlot& b,
                          Enclosure enclosure) {
  const double iou = polygon_iou_exact(a, b);
  const PointList pa = traversal_list(a);
  const PointList pb = traversal_list(b);
  const double area_a = polygon_area(pa);
  const double area_b = polygon_area(pb);
  // union = A + B - I, and iou = I / union, so union = (A + B) / (1 + iou).
  const double uni = (area_a + area_b) / (1.0 + iou);
  double hull_area;
  if (enclosure == Enclosure::kConvexHull) {
    PointList all(pa);
    all.insert(all.end(), pb.begin(), pb.end());
    hull_area = polygon_area(convex_hull(std::move(all)));
  } else {
    double min_x = pa[0].x, max_x = pa[0].x, min_y = pa[0].y, max_y = pa[0].y;
    for (const auto& pts : {pa, pb})
      for (const auto& p : pts) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
      }
    hull_area = (max_x - min_x) * (max_y - min_y);
  }
  return iou - (hull_area - uni) / (hull_area + kAreaEps);
}

}  // namespace slotkit

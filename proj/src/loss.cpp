#include "slotkit/loss.hpp"

#include <algorithm>
#include <cmath>

namespace slotkit {

void validate(const LossWeights& w) {
  if (!std::isfinite(w.w_giou) || !std::isfinite(w.w_dist) || w.w_giou < 0 ||
      w.w_dist < 0)
    throw std::invalid_argument("loss weights must be finite and >= 0");
}

double corner_distance_loss(const PolygonSlot& pred, const PolygonSlot& gt) {
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) acc += norm(pred.corners[i] - gt.corners[i]);
  return acc * 0.25;
}

namespace {

// One axis of a corner box: value and d/d(center), d/d(corner).
struct AxisVal {
  double v;
  double d_c;
  double d_p;
};

AxisVal axis_min(double c, double p) {
  // Tie goes to the center branch, whose coupling into the per-corner
  // gradient is the smaller (1/4-weighted) one.
  if (p < c) return {p, 0.0, 1.0};
  return {c, 1.0, 0.0};
}

AxisVal axis_max(double c, double p) {
  if (p > c) return {p, 0.0, 1.0};
  return {c, 1.0, 0.0};
}

// GIoU of one pred corner box against a fixed gt corner box, with the
// gradient w.r.t. the four pred box coordinates (mnx, mny, mxx, mxy).
struct BoxGiouGrad {
  double value;
  double d[4];
};

BoxGiouGrad box_giou_grad(const AxisBox& p, const AxisBox& g) {
  const double mnx = p.min_corner.x, mny = p.min_corner.y;
  const double mxx = p.max_corner.x, mxy = p.max_corner.y;
  const double gnx = g.min_corner.x, gny = g.min_corner.y;
  const double gxx = g.max_corner.x, gxy = g.max_corner.y;

  const double pw = mxx - mnx, ph = mxy - mny;
  const double area_p = pw * ph;
  const double area_g = (gxx - gnx) * (gxy - gny);

  const double iw = std::min(mxx, gxx) - std::max(mnx, gnx);
  const double ih = std::min(mxy, gxy) - std::max(mny, gny);
  const double inter = std::max(0.0, iw) * std::max(0.0, ih);

  const double cw = std::max(mxx, gxx) - std::min(mnx, gnx);
  const double ch = std::max(mxy, gxy) - std::min(mny, gny);
  const double c = cw * ch;

  const double uni = area_p + area_g - inter;

  // d area_p: [mnx, mny, mxx, mxy]
  const double d_ap[4] = {-ph, -pw, ph, pw};

  // d inter: active only when both overlap extents are positive; ties at the
  // min/max route to the gt side (zero derivative).
  double d_i[4] = {0, 0, 0, 0};
  if (iw > 0 && ih > 0) {
    if (mnx > gnx) d_i[0] = -ih;
    if (mny > gny) d_i[1] = -iw;
    if (mxx < gxx) d_i[2] = ih;
    if (mxy < gxy) d_i[3] = iw;
  }

  double d_c[4] = {0, 0, 0, 0};
  if (mnx < gnx) d_c[0] = -ch;
  if (mny < gny) d_c[1] = -cw;
  if (mxx > gxx) d_c[2] = ch;
  if (mxy > gxy) d_c[3] = cw;

  const double den_u = uni + kAreaEps;
  const double den_c = c + kAreaEps;

  BoxGiouGrad out;
  out.value = inter / den_u - (c - uni) / den_c;
  // Exactly coincident boxes sit on the kink; the subgradient there is 0
  // (every tie resolves to the gt branch), which keeps descent fixed at the
  // optimum instead of chasing the epsilon residue off it.
  if (mnx == gnx && mny == gny && mxx == gxx && mxy == gxy) {
    out.d[0] = out.d[1] = out.d[2] = out.d[3] = 0.0;
    return out;
  }
  for (int k = 0; k < 4; ++k) {
    const double d_u = d_ap[k] - d_i[k];
    const double d_iou = (d_i[k] * den_u - inter * d_u) / (den_u * den_u);
    const double d_pen =
        ((d_c[k] - d_u) * den_c - (c - uni) * d_c[k]) / (den_c * den_c);
    out.d[k] = d_iou - d_pen;
  }
  return out;
}

}  // namespace

LossBreakdown polygon_loss(const PolygonSlot& pred, const PolygonSlot& gt,
                           const LossWeights& w, const LossOptions& opts) {
  validate(w);
  validate(gt);
  for (const auto& p : pred.corners)
    if (!p.finite())
      throw std::invalid_argument("pred corner is not finite");

  const bool centroid_center = !opts.pred_center.has_value();
  const Point2 pc = centroid_center ? centroid(pred) : *opts.pred_center;
  const Point2 gc = centroid(gt);

  LossBreakdown out;
  CornerGradient giou_grad{};
  double mean_giou = 0.0;

  for (int i = 0; i < 4; ++i) {
    const auto ax_min_x = axis_min(pc.x, pred.corners[i].x);
    const auto ax_max_x = axis_max(pc.x, pred.corners[i].x);
    const auto ax_min_y = axis_min(pc.y, pred.corners[i].y);
    const auto ax_max_y = axis_max(pc.y, pred.corners[i].y);

    const AxisBox pbox{{ax_min_x.v, ax_min_y.v}, {ax_max_x.v, ax_max_y.v}};
    const AxisBox gbox = corner_box(gc, gt.corners[i]);
    const auto bg = box_giou_grad(pbox, gbox);
    mean_giou += 0.25 * bg.value;

    // Chain through the box coordinates into (center, corner_i). The
    // centroid couples every corner with weight 1/4 per axis.
    const double d_cx = bg.d[0] * ax_min_x.d_c + bg.d[2] * ax_max_x.d_c;
    const double d_cy = bg.d[1] * ax_min_y.d_c + bg.d[3] * ax_max_y.d_c;
    const double d_px = bg.d[0] * ax_min_x.d_p + bg.d[2] * ax_max_x.d_p;
    const double d_py = bg.d[1] * ax_min_y.d_p + bg.d[3] * ax_max_y.d_p;

    giou_grad[2 * i] += 0.25 * d_px;
    giou_grad[2 * i + 1] += 0.25 * d_py;
    if (centroid_center) {
      for (int j = 0; j < 4; ++j) {
        giou_grad[2 * j] += 0.25 * d_cx * 0.25;
        giou_grad[2 * j + 1] += 0.25 * d_cy * 0.25;
      }
    }
  }

  out.giou_term = 1.0 - mean_giou;

  CornerGradient dist_grad{};
  double dist = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point2 d = pred.corners[i] - gt.corners[i];
    const double r = norm(d);
    dist += 0.25 * r;
    if (r > 0) {
      dist_grad[2 * i] = 0.25 * d.x / r;
      dist_grad[2 * i + 1] = 0.25 * d.y / r;
    }
  }
  const double ns = 1.0 / opts.dist_normalizer;
  out.dist_term = dist * ns;

  out.total = w.w_giou * out.giou_term + w.w_dist * out.dist_term;
  for (int k = 0; k < 8; ++k)
    out.gradient[k] = -w.w_giou * giou_grad[k] + w.w_dist * ns * dist_grad[k];
  return out;
}

std::vector<FitStep> fit_polygon(const PolygonSlot& gt, const PolygonSlot& init,
                                 const LossWeights& w, const FitOptions& opts) {
  if (opts.lr <= 0) throw std::invalid_argument("lr must be > 0");
  if (opts.steps < 0) throw std::invalid_argument("steps must be >= 0");
  validate(gt);

  std::vector<FitStep> traj;
  traj.reserve(opts.steps + 1);
  PolygonSlot cur = init;
  LossBreakdown cur_loss = polygon_loss(cur, gt, w);
  traj.push_back({cur, cur_loss});
  const double initial = cur_loss.total;
  double lr = opts.lr;
  CornerGradient velocity{};

  for (int s = 0; s < opts.steps; ++s) {
    for (int k = 0; k < 8; ++k) {
      velocity[k] = opts.momentum * velocity[k] - lr * cur_loss.gradient[k];
      const int c = k / 2;
      if (k % 2 == 0)
        cur.corners[c].x += velocity[k];
      else
        cur.corners[c].y += velocity[k];
    }
    const LossBreakdown next = polygon_loss(cur, gt, w);
    if (next.total > 10.0 * std::max(initial, 1e-6))
      throw std::runtime_error("fit_polygon diverged: loss exceeded 10x the initial value");
    if (opts.backtrack && next.total > cur_loss.total) lr *= 0.5;
    cur_loss = next;
    traj.push_back({cur, cur_loss});
  }
  return traj;
}

double bce_classification_loss(double pred_prob, int label) {
  if (label != 0 && label != 1)
    throw std::invalid_argument("label must be 0 or 1");
  constexpr double kEps = 1e-7;
  const double p = std::clamp(pred_prob, kEps, 1.0 - kEps);
  return -(label * std::log(p) + (1 - label) * std::log(1.0 - p));
}

}  // namespace slotkit

#pragma once

#include <optional>
#include <vector>

#include "slotkit/geometry.hpp"
#include "slotkit/iou.hpp"

namespace slotkit {

struct LossWeights {
  double w_giou = 1.0;
  double w_dist = 0.75;
};

void validate(const LossWeights& w);

// Gradient layout: [x_el, y_el, x_er, y_er, x_enl, y_enl, x_enr, y_enr],
// i.e. storage corner order, x before y.
using CornerGradient = std::array<double, 8>;

struct LossBreakdown {
  double giou_term = 0.0;  // 1 - mean corner-box GIoU, in [0, 2)
  double dist_term = 0.0;  // mean corner distance, working units
  double total = 0.0;      // w_giou * giou_term + w_dist * dist_term
  CornerGradient gradient{};  // d total / d pred corners
};

struct LossOptions {
  // When set, the prediction's corner boxes are spanned from this center
  // (the value a detection head regresses) instead of the recomputed vertex
  // centroid; the gradient then treats the center as a constant.
  std::optional<Point2> pred_center;
  // Divides the distance term, e.g. by image size for unit-balance
  // experiments. Default keeps Eq-style raw working units.
  double dist_normalizer = 1.0;
};

// Mean Euclidean distance between corresponding corners.
double corner_distance_loss(const PolygonSlot& pred, const PolygonSlot& gt);

// Full polygon regression loss with analytic gradient w.r.t. the eight
// predicted corner coordinates. The ground truth must be valid; a degenerate
// prediction still yields a finite loss and bounded gradient through the
// epsilon-guarded ratios. Min/max ties inside corner boxes take the
// ground-truth-side (zero-derivative) branch; the distance subgradient at
// coincident corners is zero.
LossBreakdown polygon_loss(const PolygonSlot& pred, const PolygonSlot& gt,
                           const LossWeights& w = {},
                           const LossOptions& opts = {});

struct FitStep {
  PolygonSlot slot;
  LossBreakdown loss;
};

struct FitOptions {
  int steps = 500;
  double lr = 0.05;
  double momentum = 0.0;  // 0.9 mirrors the usual SGD setting
  // Halve lr whenever a step increases the loss. The distance term has a
  // constant-magnitude gradient near the optimum, so a fixed step size
  // oscillates instead of settling.
  bool backtrack = true;
};

// Plain gradient descent on the prediction's corner coordinates. Returns the
// trajectory including the initial state. Throws on divergence (loss grows
// past 10x the initial value).
std::vector<FitStep> fit_polygon(const PolygonSlot& gt, const PolygonSlot& init,
                                 const LossWeights& w = {},
                                 const FitOptions& opts = {});

// Binary cross-entropy with the probability clamped to [1e-7, 1 - 1e-7].
double bce_classification_loss(double pred_prob, int label);

}  // namespace slotkit

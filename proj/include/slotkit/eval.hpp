#pragma once

#include <map>
#include <vector>

#include "slotkit/geometry.hpp"

namespace slotkit {

struct MatchPair {
  int pred = -1;
  int gt = -1;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<int> unmatched_preds;
  std::vector<int> unmatched_gts;
};

// Greedy one-to-one matching in descending prediction confidence; each
// prediction takes the highest-IoU still-unmatched ground truth whose exact
// polygon IoU clears the threshold.
MatchResult match_frame(const std::vector<PolygonSlot>& preds,
                        const std::vector<PolygonSlot>& gts,
                        double iou_threshold = 0.5);

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::map<double, double> ap_per_threshold;
  double map_50 = 0.0;
  double map_50_95 = 0.0;
  bool no_ground_truth = false;  // recall undefined, reported as 0
  bool no_predictions = false;   // precision undefined, reported as 0
};

struct FramePair {
  std::vector<PolygonSlot> preds;
  std::vector<PolygonSlot> gts;
};

// Precision/recall/F1 at the fixed confidence threshold with IoU-0.5
// matching; AP per IoU threshold 0.50..0.95 via a confidence-sorted sweep
// with 101-point recall interpolation.
EvalReport compute_report(const std::vector<FramePair>& frames,
                          double conf_threshold_for_prf = 0.25);

// Fraction of matched pairs whose predicted entrance line lands on the gt
// entrance line (per-corner nearest assignment) and whose entrance angle is
// within the tolerance. 0 when nothing matched.
double entrance_accuracy(const MatchResult& matches,
                         const std::vector<PolygonSlot>& preds,
                         const std::vector<PolygonSlot>& gts,
                         double angle_tol_deg = 5.0);

}  // namespace slotkit

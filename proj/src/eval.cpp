#include "slotkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slotkit/iou.hpp"

namespace slotkit {

MatchResult match_frame(const std::vector<PolygonSlot>& preds,
                        const std::vector<PolygonSlot>& gts,
                        double iou_threshold) {
  MatchResult res;
  std::vector<size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });

  std::vector<bool> gt_taken(gts.size(), false);
  std::vector<bool> pred_matched(preds.size(), false);
  for (const size_t pi : order) {
    int best_gt = -1;
    double best_iou = 0.0;
    for (size_t gi = 0; gi < gts.size(); ++gi) {
      if (gt_taken[gi]) continue;
      const double iou = polygon_iou_exact(preds[pi], gts[gi]);
      if (iou >= iou_threshold && iou > best_iou) {
        best_iou = iou;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0) {
      gt_taken[best_gt] = true;
      pred_matched[pi] = true;
      res.pairs.push_back({static_cast<int>(pi), best_gt, best_iou});
    }
  }
  for (size_t i = 0; i < preds.size(); ++i)
    if (!pred_matched[i]) res.unmatched_preds.push_back(static_cast<int>(i));
  for (size_t i = 0; i < gts.size(); ++i)
    if (!gt_taken[i]) res.unmatched_gts.push_back(static_cast<int>(i));
  return res;
}

namespace {

// One scored detection outcome for the PR sweep.
struct Scored {
  double conf;
  bool tp;
};

double average_precision_101(std::vector<Scored> scored, size_t total_gt) {
  if (total_gt == 0) return 0.0;
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.conf > b.conf; });
  std::vector<double> precision, recall;
  size_t tp = 0, fp = 0;
  for (const auto& s : scored) {
    s.tp ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / total_gt);
  }
  // Monotone precision envelope from the right.
  for (size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);

  double ap = 0.0;
  size_t j = 0;
  for (int r = 0; r <= 100; ++r) {
    const double target = r / 100.0;
    while (j < recall.size() && recall[j] < target) ++j;
    if (j < precision.size()) ap += precision[j];
  }
  return ap / 101.0;
}

}  // namespace

EvalReport compute_report(const std::vector<FramePair>& frames,
                          double conf_threshold_for_prf) {
  if (frames.empty()) throw std::invalid_argument("compute_report needs >= 1 frame");

  EvalReport rep;
  size_t total_gt = 0;
  for (const auto& f : frames) total_gt += f.gts.size();
  rep.no_ground_truth = total_gt == 0;

  // P/R/F1 at the operating point: threshold the confidences, match at 0.5.
  size_t tp = 0, fp = 0, fn = 0, n_pred = 0;
  for (const auto& f : frames) {
    std::vector<PolygonSlot> kept;
    for (const auto& p : f.preds)
      if (p.confidence >= conf_threshold_for_prf) kept.push_back(p);
    n_pred += kept.size();
    const MatchResult m = match_frame(kept, f.gts, 0.5);
    tp += m.pairs.size();
    fp += m.unmatched_preds.size();
    fn += m.unmatched_gts.size();
  }
  rep.no_predictions = n_pred == 0;
  rep.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  rep.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  rep.f1 = rep.precision + rep.recall > 0
               ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall)
               : 0.0;

  // AP sweep per IoU threshold over all detections, no confidence filter.
  for (int t = 50; t <= 95; t += 5) {
    const double thr = t / 100.0;
    std::vector<Scored> scored;
    for (const auto& f : frames) {
      const MatchResult m = match_frame(f.preds, f.gts, thr);
      std::vector<bool> is_tp(f.preds.size(), false);
      for (const auto& pr : m.pairs) is_tp[pr.pred] = true;
      for (size_t i = 0; i < f.preds.size(); ++i)
        scored.push_back({f.preds[i].confidence, is_tp[i]});
    }
    rep.ap_per_threshold[thr] = average_precision_101(std::move(scored), total_gt);
  }
  rep.map_50 = rep.ap_per_threshold[0.50];
  double acc = 0.0;
  for (const auto& [thr, ap] : rep.ap_per_threshold) acc += ap;
  rep.map_50_95 = acc / rep.ap_per_threshold.size();
  return rep;
}

namespace {

int nearest_gt_corner(const PolygonSlot& gt, const Point2& p) {
  int best = 0;
  double best_d = norm(p - gt.corners[0]);
  for (int i = 1; i < 4; ++i) {
    const double d = norm(p - gt.corners[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double angle_diff_deg(double a, double b) {
  double d = std::fmod(a - b, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d <= -180.0) d += 360.0;
  return std::abs(d);
}

}  // namespace

double entrance_accuracy(const MatchResult& matches,
                         const std::vector<PolygonSlot>& preds,
                         const std::vector<PolygonSlot>& gts,
                         double angle_tol_deg) {
  if (matches.pairs.empty()) return 0.0;
  size_t correct = 0;
  for (const auto& pr : matches.pairs) {
    const auto& p = preds[pr.pred];
    const auto& g = gts[pr.gt];
    const bool line_ok = nearest_gt_corner(g, p.entrance_left()) == 0 &&
                         nearest_gt_corner(g, p.entrance_right()) == 1;
    if (!line_ok) continue;
    if (angle_diff_deg(entrance_angle(p), entrance_angle(g)) <= angle_tol_deg)
      ++correct;
  }
  return static_cast<double>(correct) / matches.pairs.size();
}

}  // namespace slotkit

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "slotkit/eval.hpp"
#include "slotkit/iou.hpp"
#include "test_support.hpp"

using namespace slotkit;
using namespace slotkit::testing;

namespace {

// Axis-aligned square slot: top-left corner (x, y), side s.
PolygonSlot square(double x, double y, double s, double conf = 1.0) {
  return make_slot({Point2{x, y}, {x + s, y}, {x, y + s}, {x + s, y + s}},
                   SlotType::kPerpendicular, conf);
}

// Exact area under the monotone-precision PR curve, computed directly from
// the scored outcomes; the independent oracle for the 101-point method.
double exact_ap(std::vector<std::pair<double, bool>> scored, size_t total_gt) {
  if (total_gt == 0) return 0.0;
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> precision, recall;
  size_t tp = 0, fp = 0;
  for (const auto& [conf, is_tp] : scored) {
    is_tp ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / total_gt);
  }
  for (size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_r = 0.0;
  for (size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_r) * precision[i];
    prev_r = recall[i];
  }
  return ap;
}

// Random single-frame detection set with known per-prediction outcomes:
// true positives copy their ground truth exactly, false positives sit in
// empty space, some ground truths stay undetected.
struct SyntheticSet {
  FramePair frame;
  std::vector<std::pair<double, bool>> scored;
  size_t total_gt = 0;
};

SyntheticSet random_detection_set(std::mt19937& rng, int n_gt, int n_missed,
                                  int n_fp) {
  SyntheticSet out;
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  int gx = 0;
  for (int i = 0; i < n_gt; ++i, ++gx) {
    const auto g = square(gx * 50.0, 0.0, 30.0);
    out.frame.gts.push_back(g);
    if (i < n_gt - n_missed) {
      auto p = g;
      p.confidence = conf(rng);
      out.frame.preds.push_back(p);
      out.scored.push_back({p.confidence, true});
    }
  }
  for (int i = 0; i < n_fp; ++i, ++gx) {
    auto p = square(gx * 50.0, 200.0, 30.0, conf(rng));
    out.frame.preds.push_back(p);
    out.scored.push_back({p.confidence, false});
  }
  out.total_gt = n_gt;
  return out;
}

}  // namespace

TEST_CASE("match_frame on identical sets") {
  std::vector<PolygonSlot> slots;
  for (int i = 0; i < 5; ++i) slots.push_back(square(i * 60.0, 0.0, 40.0, 0.9));
  const auto m = match_frame(slots, slots, 0.5);
  REQUIRE(m.pairs.size() == 5);
  CHECK(m.unmatched_preds.empty());
  CHECK(m.unmatched_gts.empty());
  for (const auto& p : m.pairs) {
    CHECK(p.iou == doctest::Approx(1.0));
    CHECK(p.pred == p.gt);
  }
}

TEST_CASE("iou below the threshold leaves both sides unmatched") {
  // unit squares offset by half a side: IoU = 1/3
  const auto gt = square(0, 0, 1);
  const auto pred = square(0.5, 0, 1, 0.9);
  REQUIRE(polygon_iou_exact(pred, gt) == doctest::Approx(1.0 / 3));
  const auto m = match_frame({pred}, {gt}, 0.5);
  CHECK(m.pairs.empty());
  CHECK(m.unmatched_preds == std::vector<int>{0});
  CHECK(m.unmatched_gts == std::vector<int>{0});
  // the same pair clears a 0.3 threshold
  CHECK(match_frame({pred}, {gt}, 0.3).pairs.size() == 1);
}

TEST_CASE("one-to-one matching favours the higher confidence") {
  const auto gt = square(0, 0, 40);
  auto strong = square(2, 0, 40, 0.9);
  auto weak = square(0, 2, 40, 0.8);
  const auto m = match_frame({weak, strong}, {gt}, 0.5);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].pred == 1);  // index of the 0.9 prediction
  CHECK(m.unmatched_preds == std::vector<int>{0});
}

TEST_CASE("raising the iou threshold never matches new ground truth") {
  std::mt19937 rng(127);
  std::uniform_real_distribution<double> shift(0.0, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PolygonSlot> gts, preds;
    for (int i = 0; i < 6; ++i) {
      gts.push_back(square(i * 100.0, 0.0, 40.0));
      // a couple of candidate predictions per gt, equal confidence
      preds.push_back(square(i * 100.0 + shift(rng), 0.0, 40.0, 0.5));
      preds.push_back(square(i * 100.0, shift(rng), 40.0, 0.5));
    }
    const auto lo = match_frame(preds, gts, 0.5);
    const auto hi = match_frame(preds, gts, 0.75);
    std::vector<bool> matched_lo(gts.size(), false);
    for (const auto& p : lo.pairs) matched_lo[p.gt] = true;
    for (const auto& p : hi.pairs) CHECK(matched_lo[p.gt]);
    CHECK(hi.pairs.size() <= lo.pairs.size());
  }
}

TEST_CASE("perfect predictions score 1 everywhere") {
  std::vector<FramePair> frames(3);
  for (int f = 0; f < 3; ++f) {
    for (int i = 0; i < 4; ++i) {
      const auto g = square(i * 60.0, f * 60.0, 40.0);
      frames[f].gts.push_back(g);
      auto p = g;
      p.confidence = 0.9;
      frames[f].preds.push_back(p);
    }
  }
  const auto rep = compute_report(frames);
  CHECK(rep.precision == doctest::Approx(1.0));
  CHECK(rep.recall == doctest::Approx(1.0));
  CHECK(rep.f1 == doctest::Approx(1.0));
  CHECK(rep.map_50 == doctest::Approx(1.0));
  CHECK(rep.map_50_95 == doctest::Approx(1.0));
  CHECK_FALSE(rep.no_ground_truth);
  CHECK_FALSE(rep.no_predictions);
}

TEST_CASE("empty prediction and ground-truth sets raise their flags") {
  FramePair only_gt;
  only_gt.gts.push_back(square(0, 0, 40));
  auto rep = compute_report({only_gt});
  CHECK(rep.no_predictions);
  CHECK(rep.recall == 0.0);
  CHECK(rep.map_50 == 0.0);

  FramePair only_pred;
  only_pred.preds.push_back(square(0, 0, 40, 0.9));
  rep = compute_report({only_pred});
  CHECK(rep.no_ground_truth);
  CHECK(rep.recall == 0.0);
  CHECK(rep.precision == 0.0);

  CHECK_THROWS_AS(compute_report({}), std::invalid_argument);
}

TEST_CASE("hand-countable mixed set") {
  // 10 gts each detected at IoU 0.7 plus 5 disjoint false positives,
  // every confidence equal
  FramePair frame;
  for (int i = 0; i < 10; ++i) {
    frame.gts.push_back(square(i * 100.0, 0.0, 34.0));
    // side 34 shifted 6: overlap 28x34 over union 40x34 = 0.7 exactly
    frame.preds.push_back(square(i * 100.0 + 6.0, 0.0, 34.0, 0.5));
  }
  for (int i = 0; i < 5; ++i)
    frame.preds.push_back(square(i * 100.0, 500.0, 34.0, 0.5));
  REQUIRE(polygon_iou_exact(frame.preds[0], frame.gts[0]) == doctest::Approx(0.7));

  const auto rep = compute_report({frame});
  CHECK(rep.precision == doctest::Approx(10.0 / 15).epsilon(1e-4 / 0.6667));
  CHECK(rep.recall == doctest::Approx(1.0));
  CHECK(rep.f1 == doctest::Approx(0.8));
  // 0.7 < 0.75: every detection misses at the 0.75 threshold
  CHECK(rep.ap_per_threshold.at(0.75) == 0.0);
  CHECK(rep.ap_per_threshold.at(0.95) == 0.0);
  CHECK(rep.map_50 > 0.0);
}

TEST_CASE("101-point ap tracks the exact pr area") {
  // every gt is eventually detected so the recall axis is fully swept;
  // a truncated recall ceiling costs the 101-point grid up to 1/101 on its
  // own and is not a disagreement between the two integrators
  std::mt19937 rng(131);
  for (int trial = 0; trial < 10; ++trial) {
    const auto set = random_detection_set(rng, 200, 0, 10 + 2 * trial);
    REQUIRE(set.scored.size() >= 200);
    const auto rep = compute_report({set.frame});
    const double oracle = exact_ap(set.scored, set.total_gt);
    CHECK(std::abs(rep.map_50 - oracle) < 1e-3);
  }
}

TEST_CASE("false positives only ever hurt, true positives only ever help") {
  std::mt19937 rng(137);
  const auto base = random_detection_set(rng, 40, 10, 8);
  const auto rep = compute_report({base.frame});

  auto with_fp = base.frame;
  with_fp.preds.push_back(square(5000.0, 5000.0, 30.0, 0.99));
  const auto rep_fp = compute_report({with_fp});
  CHECK(rep_fp.precision <= rep.precision + 1e-12);
  CHECK(rep_fp.map_50 <= rep.map_50 + 1e-12);
  CHECK(rep_fp.recall == doctest::Approx(rep.recall));

  // detect one of the previously missed ground truths
  auto with_tp = base.frame;
  auto extra = base.frame.gts.back();
  extra.confidence = 0.9;
  with_tp.preds.push_back(extra);
  const auto rep_tp = compute_report({with_tp});
  CHECK(rep_tp.recall >= rep.recall - 1e-12);
  CHECK(rep_tp.map_50 >= rep.map_50 - 1e-12);
}

TEST_CASE("report is invariant under frame permutation") {
  std::mt19937 rng(139);
  std::vector<FramePair> frames;
  for (int f = 0; f < 8; ++f)
    frames.push_back(random_detection_set(rng, 10, f % 4, 3).frame);
  auto shuffled = frames;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto a = compute_report(frames);
  const auto b = compute_report(shuffled);
  CHECK(a.precision == doctest::Approx(b.precision).epsilon(1e-12));
  CHECK(a.recall == doctest::Approx(b.recall).epsilon(1e-12));
  CHECK(a.map_50 == doctest::Approx(b.map_50).epsilon(1e-12));
  CHECK(a.map_50_95 == doctest::Approx(b.map_50_95).epsilon(1e-12));
}

TEST_CASE("entrance accuracy rewards the right line and angle") {
  const auto gt = square(0, 0, 40);

  SUBCASE("identical slots") {
    const auto m = match_frame({gt}, {gt}, 0.5);
    CHECK(entrance_accuracy(m, {gt}, {gt}) == doctest::Approx(1.0));
  }

  SUBCASE("entrance and ending lines swapped") {
    // same boundary polygon, roles rotated: IoU is 1 but the entrance is wrong
    PolygonSlot swapped = gt;
    std::swap(swapped.corners[0], swapped.corners[2]);
    std::swap(swapped.corners[1], swapped.corners[3]);
    const auto m = match_frame({swapped}, {gt}, 0.5);
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].iou == doctest::Approx(1.0));
    CHECK(entrance_accuracy(m, {swapped}, {gt}) == 0.0);
  }

  SUBCASE("small angle error within tolerance") {
    auto tilted = gt;
    const Point2 c = centroid(gt);
    const double a = 3.0 * M_PI / 180.0;
    for (auto& p : tilted.corners) {
      const Point2 d = p - c;
      p = c + Point2{d.x * std::cos(a) - d.y * std::sin(a),
                     d.x * std::sin(a) + d.y * std::cos(a)};
    }
    const auto m = match_frame({tilted}, {gt}, 0.5);
    REQUIRE(m.pairs.size() == 1);
    CHECK(entrance_accuracy(m, {tilted}, {gt}, 5.0) == doctest::Approx(1.0));
    CHECK(entrance_accuracy(m, {tilted}, {gt}, 2.0) == 0.0);
  }

  SUBCASE("no matches reports zero") {
    const auto m = match_frame({}, {gt}, 0.5);
    CHECK(entrance_accuracy(m, {}, {gt}) == 0.0);
  }
}

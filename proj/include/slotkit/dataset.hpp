#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "slotkit/camera.hpp"
#include "slotkit/geometry.hpp"

namespace slotkit {

enum class SceneTag { kNormal, kIndoor, kPaving };

SceneTag scene_tag_from_string(const std::string& s);
std::string to_string(SceneTag t);

// One annotated topview frame. Slot corners are in topview raster pixels and
// may fall outside the raster (border truncation happens in real scenes).
struct LabeledFrame {
  std::string image_path;
  TopviewSpec spec;
  std::vector<PolygonSlot> slots;
  std::optional<SceneTag> scene_tag;
};

// Plain-text annotation files. Grammar (one token stream per line):
//   # comments and blank lines ignored
//   spec <W> <H> <coverage_w_m> <coverage_h_m>        (once, before frames)
//   frame <image_path> <scene_tag|-> <n_slots>
//   slot <type> <confidence> <x1> <y1> ... <x4> <y4>  (n_slots times)
// Corner order in the file is the storage order EL ER EnL EnR.
std::vector<LabeledFrame> read_annotations(const std::string& path);
void write_annotations(const std::string& path,
                       const std::vector<LabeledFrame>& frames);

// One slot of the documented PS2.0 intermediate export:
// "x1 y1 x2 y2 angle_deg type" - the two entrance marking points, the slot
// direction (degrees, counterclockwise from +x) and the slot type.
struct Ps20Record {
  Point2 entrance_left;
  Point2 entrance_right;
  double angle_deg = 90.0;
  SlotType type = SlotType::kPerpendicular;
};

struct Ps20Options {
  double px_per_meter = 60.0;  // 600 px square image over a 10 m patch
  double depth_perpendicular_m = 5.0;
  double depth_parallel_m = 2.5;
  double depth_diagonal_m = 5.0;
};

// Synthesizes the ending line along the slot direction at the standard depth
// for the slot type. Records with coincident marking points (or a direction
// collapsing the polygon) are skipped with a warning.
std::vector<PolygonSlot> convert_ps20(const std::vector<Ps20Record>& records,
                                      const Ps20Options& opts = {});

std::vector<Ps20Record> read_ps20_export(const std::string& path);

struct AugmentOp {
  enum class Kind { kFlipLr, kFlipUd, kRotate, kHsv } kind = Kind::kFlipLr;
  double angle_deg = 0.0;           // kRotate
  double dh = 0, ds = 0, dv = 0;    // kHsv gains (fractions)

  static AugmentOp flip_lr() { return {Kind::kFlipLr}; }
  static AugmentOp flip_ud() { return {Kind::kFlipUd}; }
  static AugmentOp rotate(double deg) { return {Kind::kRotate, deg}; }
  static AugmentOp hsv(double dh, double ds, double dv) {
    return {Kind::kHsv, 0.0, dh, ds, dv};
  }
};

struct AugmentOptions {
  // Slots keep their label as long as every corner stays within this
  // fraction of the raster size outside the border; others are dropped.
  double keep_margin_frac = 0.10;
};

struct AugmentResult {
  LabeledFrame frame;
  cv::Mat image;
};

// Applies one augmentation to image and labels together. Flips swap the
// left/right corner roles (a mirrored left corner IS the right corner);
// rotation spins around the raster origin (ego) and preserves corner order;
// HSV leaves labels untouched.
AugmentResult augment(const LabeledFrame& frame, const cv::Mat& image,
                      const AugmentOp& op, const AugmentOptions& opts = {});

// Draws a random op the way training does: uniform choice among the four
// kinds, rotation angle in [0, 25] degrees, HSV gains in +-0.015 / +-0.7 /
// +-0.4. Deterministic for a given generator state.
AugmentOp random_augment_op(std::mt19937& rng);

}  // namespace slotkit

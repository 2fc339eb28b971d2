#pragma once

#include <string>
#include <vector>

#include "slotkit/geometry.hpp"

namespace slotkit {

// YOLO-style dense head layout. Per anchor the channels are
// [tx, ty, dx1, dy1, dx2, dy2, dx3, dy3, dx4, dy4, obj, class scores...]:
// sigmoid center offsets within the cell, raw corner offsets in pixels
// (signed and unbounded, so no squashing), objectness logit and per-type
// class logits.
struct HeadSpec {
  int grid_x = 20, grid_y = 20;
  int anchors_per_cell = 1;
  int classes = 3;
  double stride = 32.0;  // pixels per cell

  int values_per_anchor() const { return 11 + classes; }
  size_t value_count() const {
    return static_cast<size_t>(grid_y) * grid_x * anchors_per_cell *
           values_per_anchor();
  }
};

void validate(const HeadSpec& head);

// Dense pre-activation prediction tensor, row-major (y, x, anchor, value).
struct RawPrediction {
  std::vector<float> values;
};

// Decodes every anchor whose combined confidence clears the threshold.
// Confidence = sigmoid(obj) * max softmax(class); slot type = argmax class.
// Candidates whose polygon is not simple are dropped. Throws on a tensor /
// head shape mismatch.
std::vector<PolygonSlot> decode(const RawPrediction& raw, const HeadSpec& head,
                                double conf_threshold = 0.25);

// Inverse of decode for testing: writes each slot into the cell holding its
// centroid. Confidences at sigmoid saturation cannot be represented exactly.
RawPrediction encode(const std::vector<PolygonSlot>& slots, const HeadSpec& head);

// Greedy descending-confidence suppression with exact polygon IoU. Output is
// sorted by confidence (ties keep input order) and pairwise IoU stays at or
// below the threshold.
std::vector<PolygonSlot> polygon_nms(const std::vector<PolygonSlot>& slots,
                                     double iou_threshold = 0.45);

// On-disk tensor: flat little-endian float32 at `path`, HeadSpec in a text
// sidecar at `path + ".head"`.
void write_prediction(const std::string& path, const HeadSpec& head,
                      const RawPrediction& raw);
std::pair<HeadSpec, RawPrediction> read_prediction(const std::string& path);

}  // namespace slotkit

#include "slotkit/decode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "slotkit/iou.hpp"

namespace slotkit {

void validate(const HeadSpec& head) {
  if (head.grid_x <= 0 || head.grid_y <= 0)
    throw std::invalid_argument("head grid must be positive");
  if (head.anchors_per_cell < 1)
    throw std::invalid_argument("head needs at least one anchor per cell");
  if (head.classes < 1)
    throw std::invalid_argument("head needs at least one class");
  if (!(head.stride > 0))
    throw std::invalid_argument("head stride must be > 0");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

std::vector<PolygonSlot> decode(const RawPrediction& raw, const HeadSpec& head,
                                double conf_threshold) {
  validate(head);
  if (raw.values.size() != head.value_count())
    throw std::invalid_argument("prediction tensor size does not match head spec");
  const int v = head.values_per_anchor();
  std::vector<PolygonSlot> out;
  for (int cy = 0; cy < head.grid_y; ++cy) {
    for (int cx = 0; cx < head.grid_x; ++cx) {
      for (int a = 0; a < head.anchors_per_cell; ++a) {
        const float* p =
            raw.values.data() +
            ((static_cast<size_t>(cy) * head.grid_x + cx) * head.anchors_per_cell + a) * v;
        const double obj = sigmoid(p[10]);
        // softmax over class logits
        double max_logit = p[11];
        for (int c = 1; c < head.classes; ++c)
          max_logit = std::max<double>(max_logit, p[11 + c]);
        double denom = 0.0;
        for (int c = 0; c < head.classes; ++c)
          denom += std::exp(p[11 + c] - max_logit);
        int best = 0;
        double best_prob = 0.0;
        for (int c = 0; c < head.classes; ++c) {
          const double prob = std::exp(p[11 + c] - max_logit) / denom;
          if (prob > best_prob) {
            best_prob = prob;
            best = c;
          }
        }
        const double conf = obj * best_prob;
        if (conf < conf_threshold) continue;

        const Point2 center{(cx + sigmoid(p[0])) * head.stride,
                            (cy + sigmoid(p[1])) * head.stride};
        PolygonSlot slot;
        for (int i = 0; i < 4; ++i)
          slot.corners[i] = center + Point2{p[2 + 2 * i], p[3 + 2 * i]};
        slot.confidence = conf;
        slot.slot_type = static_cast<SlotType>(best % 3);
        if (!is_simple(slot)) continue;
        out.push_back(slot);
      }
    }
  }
  return out;
}

RawPrediction encode(const std::vector<PolygonSlot>& slots, const HeadSpec& head) {
  validate(head);
  RawPrediction raw;
  // Large negative objectness everywhere = "no detection".
  raw.values.assign(head.value_count(), 0.0f);
  const int v = head.values_per_anchor();
  for (size_t i = 0; i < raw.values.size(); i += v) raw.values[i + 10] = -40.0f;

  for (const auto& slot : slots) {
    validate(slot);
    const Point2 c = centroid(slot);
    const int cx = static_cast<int>(std::floor(c.x / head.stride));
    const int cy = static_cast<int>(std::floor(c.y / head.stride));
    if (cx < 0 || cx >= head.grid_x || cy < 0 || cy >= head.grid_y)
      throw std::invalid_argument("slot centroid falls outside the head grid");
    float* p = raw.values.data() +
               (static_cast<size_t>(cy) * head.grid_x + cx) *
                   head.anchors_per_cell * v;
    const double fx = std::clamp(c.x / head.stride - cx, 1e-6, 1.0 - 1e-6);
    const double fy = std::clamp(c.y / head.stride - cy, 1e-6, 1.0 - 1e-6);
    p[0] = static_cast<float>(logit(fx));
    p[1] = static_cast<float>(logit(fy));
    for (int i = 0; i < 4; ++i) {
      p[2 + 2 * i] = static_cast<float>(slot.corners[i].x - c.x);
      p[3 + 2 * i] = static_cast<float>(slot.corners[i].y - c.y);
    }
    // Peaked class logits make softmax_max ~ 1, so objectness carries the
    // whole confidence.
    const int cls = static_cast<int>(slot.slot_type) % head.classes;
    for (int k = 0; k < head.classes; ++k) p[11 + k] = k == cls ? 40.0f : -40.0f;
    const double conf = std::clamp(slot.confidence, 1e-6, 1.0 - 1e-6);
    p[10] = static_cast<float>(logit(conf));
  }
  return raw;
}

std::vector<PolygonSlot> polygon_nms(const std::vector<PolygonSlot>& slots,
                                     double iou_threshold) {
  for (const auto& s : slots) validate(s);
  std::vector<size_t> order(slots.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return slots[a].confidence > slots[b].confidence;
  });
  // A threshold of 1 still removes exact duplicates (IoU == 1).
  const double eff = std::min(iou_threshold, 1.0 - 1e-9);
  std::vector<PolygonSlot> kept;
  for (const size_t i : order) {
    bool suppressed = false;
    for (const auto& k : kept) {
      if (polygon_iou_exact(slots[i], k) > eff) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(slots[i]);
  }
  return kept;
}

void write_prediction(const std::string& path, const HeadSpec& head,
                      const RawPrediction& raw) {
  validate(head);
  if (raw.values.size() != head.value_count())
    throw std::invalid_argument("prediction tensor size does not match head spec");
  std::ofstream head_out(path + ".head");
  if (!head_out) throw std::runtime_error("cannot write header: " + path + ".head");
  head_out << "grid " << head.grid_x << " " << head.grid_y << "\n"
           << "anchors " << head.anchors_per_cell << "\n"
           << "classes " << head.classes << "\n"
           << "stride " << head.stride << "\n";
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write tensor: " + path);
  bin.write(reinterpret_cast<const char*>(raw.values.data()),
            static_cast<std::streamsize>(raw.values.size() * sizeof(float)));
}

std::pair<HeadSpec, RawPrediction> read_prediction(const std::string& path) {
  std::ifstream head_in(path + ".head");
  if (!head_in) throw std::runtime_error("cannot open header: " + path + ".head");
  HeadSpec head;
  std::string key;
  while (head_in >> key) {
    if (key == "grid") head_in >> head.grid_x >> head.grid_y;
    else if (key == "anchors") head_in >> head.anchors_per_cell;
    else if (key == "classes") head_in >> head.classes;
    else if (key == "stride") head_in >> head.stride;
    else throw std::runtime_error(path + ".head: unknown field '" + key + "'");
    if (!head_in) throw std::runtime_error(path + ".head: malformed value");
  }
  validate(head);
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open tensor: " + path);
  RawPrediction raw;
  raw.values.resize(head.value_count());
  bin.read(reinterpret_cast<char*>(raw.values.data()),
           static_cast<std::streamsize>(raw.values.size() * sizeof(float)));
  if (static_cast<size_t>(bin.gcount()) != raw.values.size() * sizeof(float))
    throw std::runtime_error(path + ": tensor shorter than header promises");
  return {head, std::move(raw)};
}

}  // namespace slotkit

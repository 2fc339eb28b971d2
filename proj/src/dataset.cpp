#include "slotkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <opencv2/imgproc.hpp>

namespace slotkit {

SceneTag scene_tag_from_string(const std::string& s) {
  if (s == "normal") return SceneTag::kNormal;
  if (s == "indoor") return SceneTag::kIndoor;
  if (s == "paving") return SceneTag::kPaving;
  throw std::invalid_argument("unknown scene tag: '" + s + "'");
}

std::string to_string(SceneTag t) {
  switch (t) {
    case SceneTag::kNormal: return "normal";
    case SceneTag::kIndoor: return "indoor";
    case SceneTag::kPaving: return "paving";
  }
  throw std::logic_error("bad SceneTag");
}

namespace {

[[noreturn]] void parse_error(const std::string& path, int line,
                              const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::vector<LabeledFrame> read_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open annotation file: " + path);
  std::vector<LabeledFrame> frames;
  TopviewSpec spec;
  bool have_spec = false;
  std::string line;
  int lineno = 0;
  int pending_slots = 0;

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key) || key[0] == '#') continue;
    if (key == "spec") {
      if (!(ss >> spec.width >> spec.height >> spec.coverage_w >> spec.coverage_h))
        parse_error(path, lineno, "spec needs W H coverage_w coverage_h");
      spec.origin = {spec.width / 2.0, spec.height / 2.0};
      validate(spec);
      have_spec = true;
    } else if (key == "frame") {
      if (pending_slots > 0)
        parse_error(path, lineno, "previous frame is missing slot records");
      if (!have_spec) parse_error(path, lineno, "'frame' before 'spec'");
      LabeledFrame f;
      f.spec = spec;
      std::string tag;
      if (!(ss >> f.image_path >> tag >> pending_slots) || pending_slots < 0)
        parse_error(path, lineno, "frame needs image_path scene_tag n_slots");
      if (tag != "-") {
        try {
          f.scene_tag = scene_tag_from_string(tag);
        } catch (const std::invalid_argument& e) {
          parse_error(path, lineno, e.what());
        }
      }
      frames.push_back(std::move(f));
    } else if (key == "slot") {
      if (frames.empty() || pending_slots == 0)
        parse_error(path, lineno, "unexpected slot record");
      PolygonSlot s;
      std::string type;
      if (!(ss >> type >> s.confidence)) parse_error(path, lineno, "slot needs type and confidence");
      try {
        s.slot_type = slot_type_from_string(type);
      } catch (const std::invalid_argument& e) {
        parse_error(path, lineno, e.what());
      }
      for (int i = 0; i < 4; ++i)
        if (!(ss >> s.corners[i].x >> s.corners[i].y))
          parse_error(path, lineno, "slot needs 8 corner coordinates");
      if (s.confidence < 0 || s.confidence > 1)
        parse_error(path, lineno, "slot confidence outside [0, 1]");
      try {
        validate(s);
      } catch (const std::invalid_argument& e) {
        parse_error(path, lineno, std::string("invalid slot polygon: ") + e.what());
      }
      frames.back().slots.push_back(s);
      --pending_slots;
    } else {
      parse_error(path, lineno, "unknown record '" + key + "'");
    }
  }
  if (pending_slots > 0)
    throw std::runtime_error(path + ": last frame is missing slot records");
  return frames;
}

void write_annotations(const std::string& path,
                       const std::vector<LabeledFrame>& frames) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write annotation file: " + path);
  out << "# slotkit annotations v1\n";
  out.precision(17);
  if (!frames.empty()) {
    const auto& s = frames.front().spec;
    out << "spec " << s.width << " " << s.height << " " << s.coverage_w << " "
        << s.coverage_h << "\n";
  }
  for (const auto& f : frames) {
    out << "frame " << f.image_path << " "
        << (f.scene_tag ? to_string(*f.scene_tag) : std::string("-")) << " "
        << f.slots.size() << "\n";
    for (const auto& s : f.slots) {
      out << "slot " << to_string(s.slot_type) << " " << s.confidence;
      for (const auto& c : s.corners) out << " " << c.x << " " << c.y;
      out << "\n";
    }
  }
}

std::vector<PolygonSlot> convert_ps20(const std::vector<Ps20Record>& records,
                                      const Ps20Options& opts) {
  std::vector<PolygonSlot> slots;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (norm(r.entrance_right - r.entrance_left) < 1e-9) {
      std::cerr << "warning: ps2.0 record " << i
                << " has coincident marking points, skipped\n";
      continue;
    }
    double depth_m = opts.depth_perpendicular_m;
    if (r.type == SlotType::kParallel) depth_m = opts.depth_parallel_m;
    if (r.type == SlotType::kDiagonal) depth_m = opts.depth_diagonal_m;
    const double depth_px = depth_m * opts.px_per_meter;
    const double a = r.angle_deg * M_PI / 180.0;
    const Point2 dir{std::cos(a), std::sin(a)};
    PolygonSlot s;
    s.slot_type = r.type;
    s.confidence = 1.0;
    s.corners[0] = r.entrance_left;
    s.corners[1] = r.entrance_right;
    s.corners[2] = r.entrance_left + dir * depth_px;
    s.corners[3] = r.entrance_right + dir * depth_px;
    if (!is_simple(s)) {
      std::cerr << "warning: ps2.0 record " << i
                << " collapses to a degenerate polygon, skipped\n";
      continue;
    }
    slots.push_back(s);
  }
  return slots;
}

std::vector<Ps20Record> read_ps20_export(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ps2.0 export: " + path);
  std::vector<Ps20Record> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first) || first[0] == '#') continue;
    ss.clear();
    ss.seekg(0);
    Ps20Record r;
    std::string type;
    if (!(ss >> r.entrance_left.x >> r.entrance_left.y >> r.entrance_right.x >>
          r.entrance_right.y >> r.angle_deg >> type))
      parse_error(path, lineno, "expected 'x1 y1 x2 y2 angle_deg type'");
    try {
      r.type = slot_type_from_string(type);
    } catch (const std::invalid_argument& e) {
      parse_error(path, lineno, e.what());
    }
    records.push_back(r);
  }
  return records;
}

namespace {

bool slot_within_margin(const PolygonSlot& s, const TopviewSpec& spec,
                        double margin_frac) {
  const double mx = margin_frac * spec.width;
  const double my = margin_frac * spec.height;
  for (const auto& c : s.corners) {
    if (c.x < -mx || c.x > spec.width + mx) return false;
    if (c.y < -my || c.y > spec.height + my) return false;
  }
  return true;
}

// Spatial label map plus the left/right role swap flips require.
void apply_spatial(LabeledFrame& frame, const AugmentOptions& opts, bool swap_roles,
                   const std::function<Point2(const Point2&)>& map) {
  std::vector<PolygonSlot> kept;
  for (auto s : frame.slots) {
    for (auto& c : s.corners) c = map(c);
    if (swap_roles) {
      std::swap(s.corners[0], s.corners[1]);  // entrance-left <-> entrance-right
      std::swap(s.corners[2], s.corners[3]);  // ending-left <-> ending-right
    }
    if (!is_simple(s)) continue;
    if (!slot_within_margin(s, frame.spec, opts.keep_margin_frac)) continue;
    kept.push_back(s);
  }
  frame.slots = std::move(kept);
}

}  // namespace

AugmentResult augment(const LabeledFrame& frame, const cv::Mat& image,
                      const AugmentOp& op, const AugmentOptions& opts) {
  if (image.empty() || image.type() != CV_8UC3)
    throw std::invalid_argument("augment expects an 8-bit 3-channel image");
  AugmentResult out;
  out.frame = frame;
  // Corner coordinates are continuous: column i covers [i, i+1), so the
  // mirror of x is W - x (matching cv::flip on pixel extents).
  const double w = image.cols;
  const double h = image.rows;

  switch (op.kind) {
    case AugmentOp::Kind::kFlipLr:
      cv::flip(image, out.image, 1);
      apply_spatial(out.frame, opts, true,
                    [w](const Point2& p) { return Point2{w - p.x, p.y}; });
      break;
    case AugmentOp::Kind::kFlipUd:
      cv::flip(image, out.image, 0);
      apply_spatial(out.frame, opts, true,
                    [h](const Point2& p) { return Point2{p.x, h - p.y}; });
      break;
    case AugmentOp::Kind::kRotate: {
      const cv::Point2f center(static_cast<float>(frame.spec.origin.x),
                               static_cast<float>(frame.spec.origin.y));
      const cv::Mat m = cv::getRotationMatrix2D(center, op.angle_deg, 1.0);
      cv::warpAffine(image, out.image, m, image.size(), cv::INTER_LINEAR,
                     cv::BORDER_CONSTANT, cv::Scalar(0, 0, 0));
      const double m00 = m.at<double>(0, 0), m01 = m.at<double>(0, 1),
                   m02 = m.at<double>(0, 2);
      const double m10 = m.at<double>(1, 0), m11 = m.at<double>(1, 1),
                   m12 = m.at<double>(1, 2);
      apply_spatial(out.frame, opts, false, [&](const Point2& p) {
        return Point2{m00 * p.x + m01 * p.y + m02, m10 * p.x + m11 * p.y + m12};
      });
      break;
    }
    case AugmentOp::Kind::kHsv: {
      if (op.dh == 0 && op.ds == 0 && op.dv == 0) {
        out.image = image.clone();
        break;
      }
      cv::Mat hsv;
      cv::cvtColor(image, hsv, cv::COLOR_BGR2HSV_FULL);
      cv::Mat hsvf;
      hsv.convertTo(hsvf, CV_32FC3);
      for (int y = 0; y < hsvf.rows; ++y) {
        auto* row = hsvf.ptr<cv::Vec3f>(y);
        for (int x = 0; x < hsvf.cols; ++x) {
          float h = row[x][0] + static_cast<float>(op.dh * 255.0);
          h = std::fmod(h + 255.0f, 255.0f);
          row[x][0] = h;
          row[x][1] = std::clamp(row[x][1] * (1.0f + static_cast<float>(op.ds)),
                                 0.0f, 255.0f);
          row[x][2] = std::clamp(row[x][2] * (1.0f + static_cast<float>(op.dv)),
                                 0.0f, 255.0f);
        }
      }
      hsvf.convertTo(hsv, CV_8UC3);
      cv::cvtColor(hsv, out.image, cv::COLOR_HSV2BGR_FULL);
      break;
    }
  }
  return out;
}

AugmentOp random_augment_op(std::mt19937& rng) {
  std::uniform_int_distribution<int> pick(0, 3);
  switch (pick(rng)) {
    case 0: return AugmentOp::flip_lr();
    case 1: return AugmentOp::flip_ud();
    case 2: {
      std::uniform_real_distribution<double> angle(0.0, 25.0);
      return AugmentOp::rotate(angle(rng));
    }
    default: {
      std::uniform_real_distribution<double> dh(-0.015, 0.015);
      std::uniform_real_distribution<double> ds(-0.7, 0.7);
      std::uniform_real_distribution<double> dv(-0.4, 0.4);
      return AugmentOp::hsv(dh(rng), ds(rng), dv(rng));
    }
  }
}

}  // namespace slotkit

// slotkit command-line tool: topview stitching, loss inspection, fitting,
// head decoding, NMS, augmentation, evaluation and overlay rendering.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "slotkit/camera.hpp"
#include "slotkit/dataset.hpp"
#include "slotkit/decode.hpp"
#include "slotkit/eval.hpp"
#include "slotkit/geometry.hpp"
#include "slotkit/loss.hpp"
#include "slotkit/render.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Input validation failure: exit code 2 (runtime failures exit 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path);
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(6) << v;
  return ss.str();
}

slotkit::PolygonSlot slot_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("malformed slot JSON: ") + e.what());
  }
  slotkit::PolygonSlot s;
  try {
    const auto& corners = j.at("corners");
    if (corners.size() != 4) throw UsageError("slot needs exactly 4 corners");
    for (int i = 0; i < 4; ++i) {
      s.corners[i].x = corners[i].at(0).get<double>();
      s.corners[i].y = corners[i].at(1).get<double>();
    }
    if (j.contains("type"))
      s.slot_type = slotkit::slot_type_from_string(j["type"].get<std::string>());
    if (j.contains("confidence")) s.confidence = j["confidence"].get<double>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed slot JSON: ") + e.what());
  }
  try {
    slotkit::validate(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return s;
}

// "WxH:coverage_m", e.g. "320x320:12.5".
slotkit::TopviewSpec parse_spec(const std::string& text) {
  slotkit::TopviewSpec spec;
  char x = 0, colon = 0;
  std::istringstream ss(text);
  if (!(ss >> spec.width >> x >> spec.height >> colon >> spec.coverage_w) ||
      x != 'x' || colon != ':')
    throw UsageError("bad --spec, expected WxH:coverage_m like 640x640:25");
  spec.coverage_h = spec.coverage_w * spec.height / spec.width;
  spec.origin = {spec.width / 2.0, spec.height / 2.0};
  slotkit::validate(spec);
  return spec;
}

void print_breakdown(const slotkit::LossBreakdown& b) {
  std::cout << "giou_term " << fmt(b.giou_term) << "\n"
            << "dist_term " << fmt(b.dist_term) << "\n"
            << "total " << fmt(b.total) << "\n"
            << "gradient";
  for (const double g : b.gradient) std::cout << " " << fmt(g);
  std::cout << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Parking-slot polygon toolkit"};
  app.require_subcommand(1);

  // --- topview ---
  auto* topview = app.add_subcommand("topview", "Stitch four fisheye images into a metric topview");
  std::string rig_path, out_path, spec_text = "640x640:25";
  std::vector<std::string> image_paths;
  topview->add_option("--rig", rig_path, "rig calibration file")->required();
  topview->add_option("--images", image_paths, "4 camera images, rig order")
      ->expected(4)->required();
  topview->add_option("--out", out_path, "output PNG path")->required();
  topview->add_option("--spec", spec_text, "topview geometry WxH:coverage_m (default 640x640:25)");

  // --- render ---
  auto* render = app.add_subcommand("render", "Draw slot overlays onto a topview image");
  std::string r_image, r_ann, r_out;
  int r_frame = 0, r_line_width = 2;
  render->add_option("--image", r_image, "topview PNG")->required();
  render->add_option("--ann", r_ann, "annotation file")->required();
  render->add_option("--out", r_out, "output PNG")->required();
  render->add_option("--frame-index", r_frame, "frame index in the annotation file (default 0)");
  render->add_option("--line-width", r_line_width, "overlay line width, px (default 2)");

  // --- loss ---
  auto* loss = app.add_subcommand("loss", "Evaluate the polygon regression loss for one slot pair");
  std::string l_gt, l_pred;
  slotkit::LossWeights l_w;
  loss->add_option("--gt", l_gt, "ground-truth slot JSON")->required();
  loss->add_option("--pred", l_pred, "predicted slot JSON")->required();
  loss->add_option("--w-giou", l_w.w_giou, "GIoU-term weight (default 1.0)");
  loss->add_option("--w-dist", l_w.w_dist, "distance-term weight (default 0.75)");

  // --- fit ---
  auto* fit = app.add_subcommand("fit", "Gradient-descent fit of a slot onto a ground truth");
  std::string f_gt, f_init;
  slotkit::LossWeights f_w;
  slotkit::FitOptions f_opts;
  int f_print_every = 0;
  fit->add_option("--gt", f_gt, "ground-truth slot JSON")->required();
  fit->add_option("--init", f_init, "initial slot JSON")->required();
  fit->add_option("--steps", f_opts.steps, "descent steps (default 500)");
  fit->add_option("--lr", f_opts.lr, "learning rate, working units (default 0.05)");
  fit->add_option("--momentum", f_opts.momentum, "momentum coefficient (default 0)");
  fit->add_option("--w-giou", f_w.w_giou, "GIoU-term weight (default 1.0)");
  fit->add_option("--w-dist", f_w.w_dist, "distance-term weight (default 0.75)");
  fit->add_option("--print-every", f_print_every, "print the trajectory every N steps (0 = final only)");

  // --- decode ---
  auto* decode = app.add_subcommand("decode", "Decode a dense head tensor into slot detections");
  std::string d_tensor, d_out;
  double d_conf = 0.25;
  decode->add_option("--tensor", d_tensor, "binary f32 tensor (HeadSpec sidecar at <tensor>.head)")->required();
  decode->add_option("--out", d_out, "output annotation file")->required();
  decode->add_option("--conf", d_conf, "confidence threshold (default 0.25)");

  // --- nms ---
  auto* nms = app.add_subcommand("nms", "Polygon-IoU non-maximum suppression on an annotation file");
  std::string n_in, n_out;
  double n_iou = 0.45;
  nms->add_option("--ann", n_in, "input annotation file")->required();
  nms->add_option("--out", n_out, "output annotation file")->required();
  nms->add_option("--iou", n_iou, "suppression IoU threshold (default 0.45)");

  // --- augment ---
  auto* augment = app.add_subcommand("augment", "Apply one augmentation to an image and its labels");
  std::string a_image, a_ann, a_out_image, a_out_ann, a_op = "random";
  int a_frame = 0;
  double a_angle = 0, a_dh = 0, a_ds = 0, a_dv = 0;
  unsigned a_seed = 0;
  augment->add_option("--image", a_image, "input image PNG")->required();
  augment->add_option("--ann", a_ann, "annotation file")->required();
  augment->add_option("--frame-index", a_frame, "frame index (default 0)");
  augment->add_option("--op", a_op, "flip_lr | flip_ud | rotate | hsv | random");
  augment->add_option("--angle", a_angle, "rotation angle, degrees");
  augment->add_option("--dh", a_dh, "hue shift fraction");
  augment->add_option("--ds", a_ds, "saturation gain fraction");
  augment->add_option("--dv", a_dv, "value gain fraction");
  augment->add_option("--seed", a_seed, "RNG seed for --op random (default 0)");
  augment->add_option("--out-image", a_out_image, "output image PNG")->required();
  augment->add_option("--out-ann", a_out_ann, "output annotation file")->required();

  // --- eval ---
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  std::string e_gt, e_pred;
  double e_conf = 0.25, e_angle_tol = 5.0;
  bool e_per_frame = false;
  eval->add_option("--gt", e_gt, "ground-truth annotation file")->required();
  eval->add_option("--pred", e_pred, "prediction annotation file (with confidences)")->required();
  eval->add_option("--conf", e_conf, "confidence threshold for P/R/F1 (default 0.25)");
  eval->add_option("--angle-tol", e_angle_tol, "entrance-angle tolerance, degrees (default 5)");
  eval->add_flag("--per-frame", e_per_frame, "also print a per-frame breakdown");

  // --- convert-ps20 ---
  auto* convert = app.add_subcommand("convert-ps20", "Convert a PS2.0 marking-point export to polygon annotations");
  std::string c_in, c_out, c_image_path = "image.png";
  slotkit::Ps20Options c_opts;
  int c_image_size = 600;
  convert->add_option("--in", c_in, "export file, lines 'x1 y1 x2 y2 angle_deg type'")->required();
  convert->add_option("--out", c_out, "output annotation file")->required();
  convert->add_option("--image-path", c_image_path, "image path stored in the frame record");
  convert->add_option("--image-size", c_image_size, "square image size, px (default 600)");
  convert->add_option("--px-per-meter", c_opts.px_per_meter, "pixels per meter (default 60)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // CLI11 prints its own message/help; fold failures onto exit code 2.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*topview) {
    require_file(rig_path);
    for (const auto& p : image_paths) require_file(p);
    const auto rig = slotkit::read_rig(rig_path);
    if (rig.size() != image_paths.size())
      throw UsageError("rig has " + std::to_string(rig.size()) + " cameras but " +
                       std::to_string(image_paths.size()) + " images were given");
    const auto spec = parse_spec(spec_text);
    std::vector<cv::Mat> images;
    for (const auto& p : image_paths) {
      cv::Mat img = cv::imread(p, cv::IMREAD_COLOR);
      if (img.empty()) throw UsageError("cannot read image: " + p);
      images.push_back(img);
    }
    const auto table = slotkit::build_remap_table(rig, spec);
    const cv::Mat top = slotkit::synthesize_topview(table, images);
    if (!cv::imwrite(out_path, top))
      throw std::runtime_error("cannot write: " + out_path);
    std::cout << out_path << "\n";
  } else if (*render) {
    require_file(r_image);
    require_file(r_ann);
    cv::Mat img = cv::imread(r_image, cv::IMREAD_COLOR);
    if (img.empty()) throw UsageError("cannot read image: " + r_image);
    const auto frames = slotkit::read_annotations(r_ann);
    if (r_frame < 0 || static_cast<size_t>(r_frame) >= frames.size())
      throw UsageError("frame index out of range");
    slotkit::OverlayStyle style;
    style.line_width = r_line_width;
    const cv::Mat out = slotkit::render_overlays(img, frames[r_frame].slots,
                                                 frames[r_frame].spec, style);
    if (!cv::imwrite(r_out, out)) throw std::runtime_error("cannot write: " + r_out);
    std::cout << r_out << "\n";
  } else if (*loss) {
    const auto gt = slot_from_json(l_gt);
    const auto pred = slot_from_json(l_pred);
    print_breakdown(slotkit::polygon_loss(pred, gt, l_w));
  } else if (*fit) {
    const auto gt = slot_from_json(f_gt);
    const auto init = slot_from_json(f_init);
    const auto traj = slotkit::fit_polygon(gt, init, f_w, f_opts);
    if (f_print_every > 0) {
      for (size_t s = 0; s < traj.size(); s += f_print_every)
        std::cout << "step " << s << " total " << fmt(traj[s].loss.total) << "\n";
    }
    const auto& last = traj.back();
    double max_err = 0.0;
    for (int i = 0; i < 4; ++i)
      max_err = std::max(max_err, slotkit::norm(last.slot.corners[i] - gt.corners[i]));
    std::cout << "steps " << traj.size() - 1 << "\n"
              << "final_total " << fmt(last.loss.total) << "\n"
              << "final_corner_max_error " << fmt(max_err) << "\n";
  } else if (*decode) {
    require_file(d_tensor);
    require_file(d_tensor + ".head");
    const auto [head, raw] = slotkit::read_prediction(d_tensor);
    const auto slots = slotkit::decode(raw, head, d_conf);
    slotkit::LabeledFrame frame;
    frame.image_path = d_tensor;
    frame.slots = slots;
    slotkit::write_annotations(d_out, {frame});
    std::cout << slots.size() << " detections\n";
  } else if (*nms) {
    require_file(n_in);
    auto frames = slotkit::read_annotations(n_in);
    size_t kept = 0;
    for (auto& f : frames) {
      f.slots = slotkit::polygon_nms(f.slots, n_iou);
      kept += f.slots.size();
    }
    slotkit::write_annotations(n_out, frames);
    std::cout << kept << " detections kept\n";
  } else if (*augment) {
    require_file(a_image);
    require_file(a_ann);
    cv::Mat img = cv::imread(a_image, cv::IMREAD_COLOR);
    if (img.empty()) throw UsageError("cannot read image: " + a_image);
    const auto frames = slotkit::read_annotations(a_ann);
    if (a_frame < 0 || static_cast<size_t>(a_frame) >= frames.size())
      throw UsageError("frame index out of range");
    slotkit::AugmentOp op;
    if (a_op == "flip_lr") op = slotkit::AugmentOp::flip_lr();
    else if (a_op == "flip_ud") op = slotkit::AugmentOp::flip_ud();
    else if (a_op == "rotate") op = slotkit::AugmentOp::rotate(a_angle);
    else if (a_op == "hsv") op = slotkit::AugmentOp::hsv(a_dh, a_ds, a_dv);
    else if (a_op == "random") {
      std::mt19937 rng(a_seed);
      op = slotkit::random_augment_op(rng);
    } else {
      throw UsageError("unknown --op '" + a_op + "'");
    }
    auto res = slotkit::augment(frames[a_frame], img, op);
    res.frame.image_path = a_out_image;
    if (!cv::imwrite(a_out_image, res.image))
      throw std::runtime_error("cannot write: " + a_out_image);
    slotkit::write_annotations(a_out_ann, {res.frame});
    std::cout << a_out_image << "\n";
  } else if (*eval) {
    require_file(e_gt);
    require_file(e_pred);
    const auto gt_frames = slotkit::read_annotations(e_gt);
    const auto pred_frames = slotkit::read_annotations(e_pred);
    if (gt_frames.size() != pred_frames.size())
      throw UsageError("gt and pred files have different frame counts");
    std::vector<slotkit::FramePair> pairs;
    for (size_t i = 0; i < gt_frames.size(); ++i) {
      if (gt_frames[i].image_path != pred_frames[i].image_path)
        throw UsageError("frame " + std::to_string(i) + ": image paths differ ('" +
                         gt_frames[i].image_path + "' vs '" +
                         pred_frames[i].image_path + "')");
      pairs.push_back({pred_frames[i].slots, gt_frames[i].slots});
    }
    const auto rep = slotkit::compute_report(pairs, e_conf);
    std::cout << "precision " << fmt(rep.precision)
              << (rep.no_predictions ? " (no predictions)" : "") << "\n"
              << "recall " << fmt(rep.recall)
              << (rep.no_ground_truth ? " (no ground truth)" : "") << "\n"
              << "f1 " << fmt(rep.f1) << "\n";
    for (const auto& [thr, ap] : rep.ap_per_threshold)
      std::cout << "ap@" << std::fixed << std::setprecision(2) << thr << " "
                << fmt(ap) << "\n";
    std::cout << "map@.5 " << fmt(rep.map_50) << "\n"
              << "map@.5:.95 " << fmt(rep.map_50_95) << "\n";
    double ent_acc_sum = 0.0;
    size_t ent_frames = 0;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const auto m = slotkit::match_frame(pairs[i].preds, pairs[i].gts, 0.5);
      const double acc = slotkit::entrance_accuracy(m, pairs[i].preds,
                                                    pairs[i].gts, e_angle_tol);
      if (!m.pairs.empty()) {
        ent_acc_sum += acc * m.pairs.size();
        ent_frames += m.pairs.size();
      }
      if (e_per_frame)
        std::cout << "frame " << i << " matched " << m.pairs.size() << " fp "
                  << m.unmatched_preds.size() << " fn " << m.unmatched_gts.size()
                  << " entrance_acc " << fmt(acc) << "\n";
    }
    std::cout << "entrance_accuracy "
              << fmt(ent_frames ? ent_acc_sum / ent_frames : 0.0) << "\n";
  } else if (*convert) {
    require_file(c_in);
    const auto records = slotkit::read_ps20_export(c_in);
    const auto slots = slotkit::convert_ps20(records, c_opts);
    slotkit::LabeledFrame frame;
    frame.image_path = c_image_path;
    frame.spec.width = frame.spec.height = c_image_size;
    frame.spec.coverage_w = frame.spec.coverage_h = c_image_size / c_opts.px_per_meter;
    frame.spec.origin = {c_image_size / 2.0, c_image_size / 2.0};
    frame.slots = slots;
    slotkit::write_annotations(c_out, {frame});
    std::cout << slots.size() << " slots converted\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

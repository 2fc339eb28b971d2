#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "slotkit/dataset.hpp"
#include "slotkit/decode.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace slotkit;
using namespace slotkit::testing;

namespace {

std::string bin() {
  const char* b = std::getenv("SLOTKIT_BIN");
  REQUIRE(b != nullptr);
  return b;
}

std::string data_dir() {
  const char* d = std::getenv("SLOTKIT_DATA");
  REQUIRE(d != nullptr);
  return d;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / "slotkit_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const auto out_file = work_dir() / "stdout.txt";
  const std::string cmd =
      bin() + " " + args + " > " + out_file.string() + " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

// "key value..." lines -> first token maps to the rest of the line.
std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto sp = line.find(' ');
    if (sp == std::string::npos) continue;
    kv[line.substr(0, sp)] = line.substr(sp + 1);
  }
  return kv;
}

const char* kUnitSquare = R"({"corners":[[-1,1],[1,1],[-1,-1],[1,-1]]})";
const char* kShiftedSquare = R"({"corners":[[-0.5,1],[1.5,1],[-0.5,-1],[1.5,-1]]})";

bool images_identical(const std::string& a, const std::string& b) {
  const cv::Mat ia = cv::imread(a, cv::IMREAD_COLOR);
  const cv::Mat ib = cv::imread(b, cv::IMREAD_COLOR);
  if (ia.empty() || ib.empty() || ia.size() != ib.size()) return false;
  cv::Mat diff;
  cv::absdiff(ia, ib, diff);
  return cv::countNonZero(diff.reshape(1)) == 0;
}

}  // namespace

TEST_CASE("argument errors exit with code 2") {
  CHECK(run("").exit_code == 2);                    // missing subcommand
  CHECK(run("frobnicate").exit_code == 2);          // unknown subcommand
  CHECK(run("loss --gt '{}'").exit_code == 2);      // missing required option
  CHECK(run("--help").exit_code == 0);
  CHECK(run("eval --gt /nope/missing.txt --pred /nope/missing.txt").exit_code == 2);
  const auto bad_json = std::string("loss --gt 'not json' --pred '") + kUnitSquare + "'";
  CHECK(run(bad_json).exit_code == 2);
}

TEST_CASE("loss subcommand reproduces the translated-square breakdown") {
  const auto r = run(std::string("loss --gt '") + kUnitSquare + "' --pred '" +
                     kShiftedSquare + "'");
  REQUIRE(r.exit_code == 0);
  const auto kv = parse_kv(r.out);
  CHECK(std::abs(std::stod(kv.at("total")) - 1.0417) < 1e-4);
  CHECK(std::abs(std::stod(kv.at("giou_term")) - 2.0 / 3) < 1e-5);
  CHECK(std::abs(std::stod(kv.at("dist_term")) - 0.5) < 1e-6);

  // weight plumbing: dropping the distance term leaves only the giou term
  const auto r2 = run(std::string("loss --gt '") + kUnitSquare + "' --pred '" +
                      kShiftedSquare + "' --w-dist 0");
  REQUIRE(r2.exit_code == 0);
  const auto kv2 = parse_kv(r2.out);
  CHECK(kv2.at("total") == kv2.at("giou_term"));
}

TEST_CASE("fit subcommand converges on the fixture pair") {
  const auto r = run(std::string("fit --gt '") + kUnitSquare + "' --init '" +
                     kShiftedSquare + "'");
  REQUIRE(r.exit_code == 0);
  const auto kv = parse_kv(r.out);
  CHECK(std::stod(kv.at("final_total")) < 1e-3);
  CHECK(std::stod(kv.at("final_corner_max_error")) < 1e-2);
  CHECK(kv.at("steps") == "500");
}

TEST_CASE("topview stitches the fixture bit-exactly and honours --spec") {
  const std::string imgs = data_dir() + "/fixture_images/front.png " +
                           data_dir() + "/fixture_images/rear.png " +
                           data_dir() + "/fixture_images/left.png " +
                           data_dir() + "/fixture_images/right.png";
  const auto out = (work_dir() / "top.png").string();
  const auto r = run("topview --rig " + data_dir() + "/fixture_rig.txt --images " +
                     imgs + " --out " + out);
  REQUIRE(r.exit_code == 0);
  CHECK(images_identical(out, data_dir() + "/golden_topview.png"));

  const auto small = (work_dir() / "top_small.png").string();
  const auto r2 = run("topview --rig " + data_dir() + "/fixture_rig.txt --images " +
                      imgs + " --out " + small + " --spec 320x320:12.5");
  REQUIRE(r2.exit_code == 0);
  const cv::Mat m = cv::imread(small, cv::IMREAD_COLOR);
  CHECK(m.cols == 320);
  CHECK(m.rows == 320);

  const auto r3 = run("topview --rig " + data_dir() +
                      "/fixture_rig.txt --images a.png b.png c.png d.png --out x.png");
  CHECK(r3.exit_code == 2);
}

TEST_CASE("render draws deterministic overlays and leaves empty frames alone") {
  const auto ann = (work_dir() / "render_ann.txt").string();
  LabeledFrame with_slot;
  with_slot.image_path = "top.png";
  with_slot.slots.push_back(
      make_slot({Point2{200, 200}, {300, 200}, {200, 330}, {300, 330}},
                SlotType::kPerpendicular, 0.87));
  LabeledFrame empty;
  empty.image_path = "top2.png";
  write_annotations(ann, {with_slot, empty});

  const std::string src = data_dir() + "/golden_topview.png";
  const auto out1 = (work_dir() / "overlay1.png").string();
  const auto out2 = (work_dir() / "overlay2.png").string();
  REQUIRE(run("render --image " + src + " --ann " + ann + " --out " + out1).exit_code == 0);
  REQUIRE(run("render --image " + src + " --ann " + ann + " --out " + out2).exit_code == 0);
  CHECK(images_identical(out1, out2));
  CHECK_FALSE(images_identical(out1, src));

  // the entrance edge midpoint is painted green
  const cv::Mat m = cv::imread(out1, cv::IMREAD_COLOR);
  const cv::Vec3b px = m.at<cv::Vec3b>(200, 250);
  CHECK(px[1] > 200);
  CHECK(px[0] < 60);
  CHECK(px[2] < 60);

  // a frame without slots renders to a copy of the input
  const auto out3 = (work_dir() / "overlay3.png").string();
  REQUIRE(run("render --image " + src + " --ann " + ann + " --frame-index 1 --out " +
              out3).exit_code == 0);
  CHECK(images_identical(out3, src));
}

TEST_CASE("decode subcommand handles an all-negative tensor") {
  HeadSpec head;
  RawPrediction raw = encode({}, head);  // objectness -40 everywhere
  const auto tensor = (work_dir() / "pred.bin").string();
  write_prediction(tensor, head, raw);
  const auto out = (work_dir() / "decoded.txt").string();
  const auto r = run("decode --tensor " + tensor + " --out " + out);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("0 detections") != std::string::npos);
  const auto frames = read_annotations(out);
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].slots.empty());

  // a populated tensor yields the slot back
  const PolygonSlot s =
      make_slot({Point2{100, 100}, {160, 100}, {100, 180}, {160, 180}},
                SlotType::kParallel, 0.8);
  write_prediction(tensor, head, encode({s}, head));
  const auto r2 = run("decode --tensor " + tensor + " --out " + out);
  REQUIRE(r2.exit_code == 0);
  CHECK(r2.out.find("1 detections") != std::string::npos);
  const auto decoded = read_annotations(out);
  REQUIRE(decoded.size() == 1);
  REQUIRE(decoded[0].slots.size() == 1);
  CHECK(norm(decoded[0].slots[0].corners[0] - s.corners[0]) < 1e-3);
  CHECK(decoded[0].slots[0].slot_type == SlotType::kParallel);
}

TEST_CASE("nms subcommand removes duplicates") {
  const auto ann = (work_dir() / "nms_in.txt").string();
  LabeledFrame f;
  f.image_path = "x.png";
  const auto a = make_slot({Point2{100, 100}, {180, 100}, {100, 200}, {180, 200}},
                           SlotType::kPerpendicular, 0.9);
  auto dup = a;
  dup.confidence = 0.6;
  auto far = make_slot({Point2{400, 400}, {470, 400}, {400, 500}, {470, 500}},
                       SlotType::kPerpendicular, 0.3);
  f.slots = {dup, a, far};
  write_annotations(ann, {f});
  const auto out = (work_dir() / "nms_out.txt").string();
  const auto r = run("nms --ann " + ann + " --out " + out + " --iou 0.5");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("2 detections kept") != std::string::npos);
  const auto frames = read_annotations(out);
  REQUIRE(frames.size() == 1);
  REQUIRE(frames[0].slots.size() == 2);
  CHECK(frames[0].slots[0].confidence == 0.9);
  CHECK(frames[0].slots[1].confidence == 0.3);
}

TEST_CASE("eval subcommand scores identical files perfectly") {
  const auto ann = (work_dir() / "eval_gt.txt").string();
  LabeledFrame f;
  f.image_path = "x.png";
  for (int i = 0; i < 3; ++i)
    f.slots.push_back(make_slot({Point2{100.0 + 90 * i, 100}, {160.0 + 90 * i, 100},
                                 {100.0 + 90 * i, 200}, {160.0 + 90 * i, 200}},
                                SlotType::kPerpendicular, 0.9));
  write_annotations(ann, {f});
  const auto r = run("eval --gt " + ann + " --pred " + ann);
  REQUIRE(r.exit_code == 0);
  const auto kv = parse_kv(r.out);
  CHECK(kv.at("precision") == "1.000000");
  CHECK(kv.at("recall") == "1.000000");
  CHECK(kv.at("f1") == "1.000000");
  CHECK(kv.at("map@.5") == "1.000000");
  CHECK(kv.at("map@.5:.95") == "1.000000");
  CHECK(kv.at("entrance_accuracy") == "1.000000");

  // mismatched frame lists are a usage error
  const auto other = (work_dir() / "eval_other.txt").string();
  LabeledFrame g = f;
  g.image_path = "y.png";
  write_annotations(other, {g});
  CHECK(run("eval --gt " + ann + " --pred " + other).exit_code == 2);
}

TEST_CASE("augment subcommand flips labels and is seed-deterministic") {
  const auto ann = (work_dir() / "aug_in.txt").string();
  LabeledFrame f;
  f.image_path = "x.png";
  f.slots.push_back(make_slot({Point2{100, 50}, {200, 50}, {100, 150}, {200, 150}}));
  write_annotations(ann, {f});
  const auto img = (work_dir() / "aug_in.png").string();
  cv::Mat noise(640, 640, CV_8UC3);
  cv::randu(noise, 0, 255);
  cv::imwrite(img, noise);

  const auto out_img = (work_dir() / "aug_out.png").string();
  const auto out_ann = (work_dir() / "aug_out.txt").string();
  const auto r = run("augment --image " + img + " --ann " + ann +
                     " --op flip_lr --out-image " + out_img + " --out-ann " + out_ann);
  REQUIRE(r.exit_code == 0);
  const auto frames = read_annotations(out_ann);
  REQUIRE(frames.size() == 1);
  REQUIRE(frames[0].slots.size() == 1);
  CHECK(frames[0].slots[0].corners[0] == Point2{440, 50});
  CHECK(frames[0].slots[0].corners[1] == Point2{540, 50});

  // same seed, same random op, same bytes out
  const auto out_img2 = (work_dir() / "aug_out2.png").string();
  const auto out_ann2 = (work_dir() / "aug_out2.txt").string();
  REQUIRE(run("augment --image " + img + " --ann " + ann +
              " --op random --seed 17 --out-image " + out_img + " --out-ann " +
              out_ann).exit_code == 0);
  REQUIRE(run("augment --image " + img + " --ann " + ann +
              " --op random --seed 17 --out-image " + out_img2 + " --out-ann " +
              out_ann2).exit_code == 0);
  CHECK(images_identical(out_img, out_img2));
  const auto a1 = read_annotations(out_ann);
  const auto a2 = read_annotations(out_ann2);
  REQUIRE(a1.size() == 1);
  REQUIRE(a1[0].slots.size() == a2[0].slots.size());
  for (size_t i = 0; i < a1[0].slots.size(); ++i)
    for (int c = 0; c < 4; ++c)
      CHECK(a1[0].slots[i].corners[c] == a2[0].slots[i].corners[c]);
}

TEST_CASE("convert-ps20 subcommand writes polygon annotations") {
  const auto in = (work_dir() / "ps20.txt").string();
  std::ofstream(in) << "100 100 400 100 90 perpendicular\n"
                    << "50 50 50 50 90 perpendicular\n";  // skipped: coincident
  const auto out = (work_dir() / "ps20_out.txt").string();
  const auto r = run("convert-ps20 --in " + in + " --out " + out);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("1 slots converted") != std::string::npos);
  const auto frames = read_annotations(out);
  REQUIRE(frames.size() == 1);
  REQUIRE(frames[0].slots.size() == 1);
  CHECK(frames[0].slots[0].corners[0] == Point2{100, 100});
  CHECK(frames[0].slots[0].corners[2].y == doctest::Approx(400.0));
  CHECK(frames[0].spec.width == 600);
}

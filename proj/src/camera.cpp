#include "slotkit/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <iostream>
#include <sstream>

namespace slotkit {

void validate(const FisheyeCamera& cam) {
  if (!(cam.fx > 0) || !(cam.fy > 0))
    throw std::invalid_argument("camera '" + cam.name + "': focal must be > 0");
  if (cam.width <= 0 || cam.height <= 0)
    throw std::invalid_argument("camera '" + cam.name + "': bad image size");
  const cv::Matx33d rrt = cam.rotation * cam.rotation.t();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double want = i == j ? 1.0 : 0.0;
      if (std::abs(rrt(i, j) - want) > 1e-6)
        throw std::invalid_argument("camera '" + cam.name +
                                    "': rotation is not orthonormal");
    }
  if (std::abs(cv::determinant(cam.rotation) - 1.0) > 1e-6)
    throw std::invalid_argument("camera '" + cam.name +
                                "': rotation determinant is not +1");
}

namespace {

double distort_theta(const FisheyeCamera& cam, double theta) {
  const double t2 = theta * theta;
  return theta *
         (1.0 + t2 * (cam.k[0] + t2 * (cam.k[1] + t2 * (cam.k[2] + t2 * cam.k[3]))));
}

double distort_theta_deriv(const FisheyeCamera& cam, double theta) {
  const double t2 = theta * theta;
  return 1.0 + t2 * (3.0 * cam.k[0] +
                     t2 * (5.0 * cam.k[1] +
                           t2 * (7.0 * cam.k[2] + t2 * 9.0 * cam.k[3])));
}

// Inverts theta_d = theta * (1 + k1 theta^2 + ...) by Newton iteration.
double undistort_theta(const FisheyeCamera& cam, double theta_d) {
  double theta = theta_d;
  for (int i = 0; i < 10; ++i) {
    const double f = distort_theta(cam, theta) - theta_d;
    const double df = distort_theta_deriv(cam, theta);
    if (std::abs(df) < 1e-12) break;
    const double step = f / df;
    theta -= step;
    if (std::abs(step) < 1e-10) break;
  }
  return theta;
}

}  // namespace

std::optional<Point2> project_ground_point(const FisheyeCamera& cam,
                                           const Point2& ground) {
  const cv::Vec3d pc =
      cam.rotation * cv::Vec3d(ground.x, ground.y, 0.0) + cam.translation;
  const double r = std::hypot(pc[0], pc[1]);
  if (r < 1e-12 && std::abs(pc[2]) < 1e-12)
    throw std::invalid_argument("ground point at camera optical center");
  const double theta = std::atan2(r, pc[2]);
  if (theta > cam.fov_deg * 0.5 * M_PI / 180.0) return std::nullopt;
  double xp = 0.0, yp = 0.0;
  if (r > 1e-12) {
    // The polynomial bends the ray angle; the perspective mapping afterwards
    // makes the zero-distortion case collapse to an exact pinhole camera.
    const double theta_d = distort_theta(cam, theta);
    if (theta_d < 0.0 || theta_d > M_PI / 2 - 1e-6) return std::nullopt;
    const double rd = std::tan(theta_d);
    xp = rd * pc[0] / r;
    yp = rd * pc[1] / r;
  }
  return Point2{cam.fx * xp + cam.cx, cam.fy * yp + cam.cy};
}

std::optional<Point2> unproject_to_ground(const FisheyeCamera& cam,
                                          const Point2& pixel) {
  const double xp = (pixel.x - cam.cx) / cam.fx;
  const double yp = (pixel.y - cam.cy) / cam.fy;
  const double rd = std::hypot(xp, yp);
  cv::Vec3d dir_cam(0.0, 0.0, 1.0);
  if (rd > 1e-12) {
    const double theta = undistort_theta(cam, std::atan(rd));
    const double s = std::sin(theta) / rd;
    dir_cam = {s * xp, s * yp, std::cos(theta)};
  }
  const cv::Matx33d rt = cam.rotation.t();
  const cv::Vec3d dir = rt * dir_cam;
  const cv::Vec3d center = -(rt * cam.translation);
  if (std::abs(dir[2]) < 1e-12) return std::nullopt;
  const double t = -center[2] / dir[2];
  if (t <= 0) return std::nullopt;
  return Point2{center[0] + t * dir[0], center[1] + t * dir[1]};
}

void validate(const TopviewSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0)
    throw std::invalid_argument("topview resolution must be positive");
  if (!(spec.coverage_w > 0) || !(spec.coverage_h > 0))
    throw std::invalid_argument("topview coverage must be positive");
  const double mx = spec.coverage_w / spec.width;
  const double my = spec.coverage_h / spec.height;
  if (std::abs(mx - my) > 1e-9)
    throw std::invalid_argument("topview meters-per-pixel differs between axes");
}

Point2 ground_to_raster(const TopviewSpec& spec, const Point2& ground) {
  const double mpp = spec.meters_per_pixel();
  return {spec.origin.x + ground.x / mpp, spec.origin.y - ground.y / mpp};
}

Point2 raster_to_ground(const TopviewSpec& spec, const Point2& pixel) {
  const double mpp = spec.meters_per_pixel();
  return {(pixel.x - spec.origin.x) * mpp, (spec.origin.y - pixel.y) * mpp};
}

namespace {

// Where a camera's optical axis pierces the ground plane; falls back to the
// footprint of the camera center when the axis runs parallel to the ground.
Point2 axis_ground_point(const FisheyeCamera& cam) {
  const cv::Matx33d rt = cam.rotation.t();
  const cv::Vec3d axis = rt * cv::Vec3d(0.0, 0.0, 1.0);
  const cv::Vec3d center = -(rt * cam.translation);
  if (std::abs(axis[2]) < 1e-9) return {center[0], center[1]};
  const double t = -center[2] / axis[2];
  if (t <= 0) return {center[0], center[1]};
  return {center[0] + t * axis[0], center[1] + t * axis[1]};
}

}  // namespace

RemapTable build_remap_table(const CameraRig& rig, const TopviewSpec& spec,
                             const StitchOptions& opts) {
  if (rig.empty()) throw std::invalid_argument("empty camera rig");
  for (const auto& cam : rig) validate(cam);
  validate(spec);

  RemapTable table;
  table.width = spec.width;
  table.height = spec.height;
  table.samples.resize(static_cast<size_t>(spec.width) * spec.height);
  table.counts.assign(table.samples.size(), 0);
  for (const auto& cam : rig) table.camera_sizes.push_back({cam.width, cam.height});

  std::vector<Point2> axis_pts;
  for (const auto& cam : rig) axis_pts.push_back(axis_ground_point(cam));
  std::vector<size_t> covered_per_camera(rig.size(), 0);

  struct Candidate {
    int cam;
    Point2 px;
    double score;
  };

  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const Point2 ground =
          raster_to_ground(spec, {static_cast<double>(x), static_cast<double>(y)});
      std::vector<Candidate> cands;
      for (size_t c = 0; c < rig.size(); ++c) {
        const auto px = project_ground_point(rig[c], ground);
        if (!px) continue;
        if (px->x < 0 || px->x > rig[c].width - 1 || px->y < 0 ||
            px->y > rig[c].height - 1)
          continue;
        cands.push_back({static_cast<int>(c), *px, norm(ground - axis_pts[c])});
      }
      if (cands.empty()) continue;
      std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
        return a.score < b.score || (a.score == b.score && a.cam < b.cam);
      });
      auto& cell = table.samples[static_cast<size_t>(y) * spec.width + x];
      auto& cnt = table.counts[static_cast<size_t>(y) * spec.width + x];
      const double gap = cands.size() > 1 ? cands[1].score - cands[0].score
                                          : std::numeric_limits<double>::max();
      if (cands.size() > 1 && gap < opts.feather_band_m) {
        const double w0 = 0.5 + gap / (2.0 * opts.feather_band_m);
        cell[0] = {cands[0].cam, static_cast<float>(cands[0].px.x),
                   static_cast<float>(cands[0].px.y), static_cast<float>(w0)};
        cell[1] = {cands[1].cam, static_cast<float>(cands[1].px.x),
                   static_cast<float>(cands[1].px.y), static_cast<float>(1.0 - w0)};
        cnt = 2;
        ++covered_per_camera[cands[0].cam];
        ++covered_per_camera[cands[1].cam];
      } else {
        cell[0] = {cands[0].cam, static_cast<float>(cands[0].px.x),
                   static_cast<float>(cands[0].px.y), 1.0f};
        cnt = 1;
        ++covered_per_camera[cands[0].cam];
      }
    }
  }

  for (size_t c = 0; c < rig.size(); ++c) {
    if (covered_per_camera[c] == 0)
      std::cerr << "warning: camera '" << rig[c].name
                << "' covers no topview pixel\n";
  }
  return table;
}

namespace {

cv::Vec3d bilinear_sample(const cv::Mat& img, float u, float v) {
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, img.cols - 1);
  const int y1 = std::min(y0 + 1, img.rows - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  const auto p00 = img.at<cv::Vec3b>(y0, x0);
  const auto p01 = img.at<cv::Vec3b>(y0, x1);
  const auto p10 = img.at<cv::Vec3b>(y1, x0);
  const auto p11 = img.at<cv::Vec3b>(y1, x1);
  cv::Vec3d out;
  for (int ch = 0; ch < 3; ++ch) {
    const double top = p00[ch] * (1 - fx) + p01[ch] * fx;
    const double bot = p10[ch] * (1 - fx) + p11[ch] * fx;
    out[ch] = top * (1 - fy) + bot * fy;
  }
  return out;
}

}  // namespace

cv::Mat synthesize_topview(const RemapTable& table,
                           const std::vector<cv::Mat>& images) {
  if (images.size() != table.camera_sizes.size())
    throw std::invalid_argument("image count does not match rig size");
  for (size_t c = 0; c < images.size(); ++c) {
    if (images[c].type() != CV_8UC3)
      throw std::invalid_argument("camera image must be 8-bit 3-channel");
    if (images[c].cols != table.camera_sizes[c].first ||
        images[c].rows != table.camera_sizes[c].second)
      throw std::invalid_argument("camera image size does not match calibration");
  }

  cv::Mat out(table.height, table.width, CV_8UC3, cv::Scalar(0, 0, 0));
  for (int y = 0; y < table.height; ++y) {
    auto* row = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < table.width; ++x) {
      const int n = table.count_at(x, y);
      if (n == 0) continue;
      cv::Vec3d acc(0, 0, 0);
      const auto& cell = table.at(x, y);
      for (int s = 0; s < n; ++s)
        acc += cell[s].weight *
               bilinear_sample(images[cell[s].camera], cell[s].u, cell[s].v);
      for (int ch = 0; ch < 3; ++ch)
        row[x][ch] = static_cast<unsigned char>(
            std::clamp(std::lround(acc[ch]), 0l, 255l));
    }
  }
  return out;
}

namespace {

[[noreturn]] void rig_error(const std::string& path, int line,
                            const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

CameraRig read_rig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rig file: " + path);
  CameraRig rig;
  FisheyeCamera cur;
  bool in_camera = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key) || key[0] == '#') continue;
    if (key == "camera") {
      if (in_camera) rig_error(path, lineno, "nested camera block");
      cur = FisheyeCamera{};
      if (!(ss >> cur.name)) rig_error(path, lineno, "camera needs a name");
      in_camera = true;
    } else if (key == "end") {
      if (!in_camera) rig_error(path, lineno, "'end' outside camera block");
      validate(cur);
      rig.push_back(cur);
      in_camera = false;
    } else if (!in_camera) {
      rig_error(path, lineno, "field '" + key + "' outside camera block");
    } else if (key == "image_size") {
      if (!(ss >> cur.width >> cur.height))
        rig_error(path, lineno, "image_size needs width height");
    } else if (key == "focal") {
      if (!(ss >> cur.fx >> cur.fy)) rig_error(path, lineno, "focal needs fx fy");
    } else if (key == "principal") {
      if (!(ss >> cur.cx >> cur.cy))
        rig_error(path, lineno, "principal needs cx cy");
    } else if (key == "distortion") {
      if (!(ss >> cur.k[0] >> cur.k[1] >> cur.k[2] >> cur.k[3]))
        rig_error(path, lineno, "distortion needs k1 k2 k3 k4");
    } else if (key == "fov_deg") {
      if (!(ss >> cur.fov_deg)) rig_error(path, lineno, "fov_deg needs a value");
    } else if (key == "rotation") {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          if (!(ss >> cur.rotation(i, j)))
            rig_error(path, lineno, "rotation needs 9 row-major values");
    } else if (key == "translation") {
      if (!(ss >> cur.translation[0] >> cur.translation[1] >> cur.translation[2]))
        rig_error(path, lineno, "translation needs tx ty tz");
    } else {
      rig_error(path, lineno, "unknown field '" + key + "'");
    }
  }
  if (in_camera) throw std::runtime_error(path + ": unterminated camera block");
  return rig;
}

void write_rig(const std::string& path, const CameraRig& rig) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write rig file: " + path);
  out << "# slotkit rig calibration v1\n";
  out.precision(17);
  for (const auto& cam : rig) {
    out << "camera " << cam.name << "\n";
    out << "  image_size " << cam.width << " " << cam.height << "\n";
    out << "  focal " << cam.fx << " " << cam.fy << "\n";
    out << "  principal " << cam.cx << " " << cam.cy << "\n";
    out << "  distortion " << cam.k[0] << " " << cam.k[1] << " " << cam.k[2]
        << " " << cam.k[3] << "\n";
    out << "  fov_deg " << cam.fov_deg << "\n";
    out << "  rotation";
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out << " " << cam.rotation(i, j);
    out << "\n";
    out << "  translation " << cam.translation[0] << " " << cam.translation[1]
        << " " << cam.translation[2] << "\n";
    out << "end\n";
  }
}

}  // namespace slotkit

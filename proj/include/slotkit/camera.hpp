#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "slotkit/geometry.hpp"

namespace slotkit {

// Equidistant-polynomial fisheye camera (Kannala-Brandt style, four
// distortion coefficients). The pose maps ego ground-frame points into the
// camera frame: X_cam = R * X_ego + t. Ego frame: x right, y forward, z up,
// origin on the ground under the vehicle center.
struct FisheyeCamera {
  std::string name;
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  std::array<double, 4> k{};  // theta-polynomial coefficients k1..k4
  cv::Matx33d rotation = cv::Matx33d::eye();
  cv::Vec3d translation{};
  int width = 1280, height = 800;
  double fov_deg = 190.0;  // full field of view; rays beyond fov/2 are out
};

// Checks rotation orthonormality (det +1 within 1e-6), positive focals and
// a sane image size. Throws std::invalid_argument.
void validate(const FisheyeCamera& cam);

// Projects a ground-plane point (meters, z = 0) into the image. Returns
// nullopt when the ray falls outside the field of view; throws when the
// point sits at the optical center.
std::optional<Point2> project_ground_point(const FisheyeCamera& cam,
                                           const Point2& ground);

// Pixel back to the ground plane. Newton-inverts the distortion polynomial.
// Returns nullopt when the ray never reaches z = 0 in front of the camera.
std::optional<Point2> unproject_to_ground(const FisheyeCamera& cam,
                                          const Point2& pixel);

// Topview raster geometry. Ego sits at `origin` (pixels); ego forward (+y,
// meters) points toward the top of the raster.
struct TopviewSpec {
  int width = 640, height = 640;
  double coverage_w = 25.0, coverage_h = 25.0;  // meters
  Point2 origin{320.0, 320.0};

  double meters_per_pixel() const { return coverage_w / width; }
};

void validate(const TopviewSpec& spec);

Point2 ground_to_raster(const TopviewSpec& spec, const Point2& ground);
Point2 raster_to_ground(const TopviewSpec& spec, const Point2& pixel);

// One source sample contributing to a topview pixel.
struct RemapSample {
  int camera = -1;
  float u = 0, v = 0;  // sub-pixel source coordinates
  float weight = 0;
};

// Precomputed topview pixel -> source camera mapping. At most two cameras
// blend at a seam; weights per pixel sum to 1. count == 0 marks uncovered.
struct RemapTable {
  int width = 0, height = 0;
  std::vector<std::array<RemapSample, 2>> samples;
  std::vector<unsigned char> counts;
  std::vector<std::pair<int, int>> camera_sizes;  // expected (width, height)

  const std::array<RemapSample, 2>& at(int x, int y) const {
    return samples[static_cast<size_t>(y) * width + x];
  }
  int count_at(int x, int y) const {
    return counts[static_cast<size_t>(y) * width + x];
  }
};

struct StitchOptions {
  double feather_band_m = 0.5;  // seam blend width (meters)
};

using CameraRig = std::vector<FisheyeCamera>;

// Builds the per-pixel remap for a rig. Each pixel goes to the covering
// camera whose optical-axis ground intersection is nearest; within the
// feather band of a seam the two nearest covering cameras blend linearly.
// A camera that covers nothing produces a warning on stderr but the table
// is still built.
RemapTable build_remap_table(const CameraRig& rig, const TopviewSpec& spec,
                             const StitchOptions& opts = {});

// Bilinear-samples the source images through the table. Uncovered pixels
// are black. Throws when an image size disagrees with its camera config.
cv::Mat synthesize_topview(const RemapTable& table,
                           const std::vector<cv::Mat>& images);

// Rig calibration file (structured text, one block per camera).
CameraRig read_rig(const std::string& path);
void write_rig(const std::string& path, const CameraRig& rig);

}  // namespace slotkit

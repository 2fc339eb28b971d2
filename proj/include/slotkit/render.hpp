#pragma once

#include <vector>

#include <opencv2/core.hpp>

#include "slotkit/geometry.hpp"
#include "slotkit/camera.hpp"

namespace slotkit {

// Overlay colors are BGR. Defaults follow the usual presentation: blue slot
// polygon and text, green entrance line.
struct OverlayStyle {
  cv::Scalar polygon_color{255, 0, 0};
  cv::Scalar entrance_color{0, 255, 0};
  cv::Scalar text_color{255, 0, 0};
  int line_width = 2;
  bool draw_angle = true;
  bool draw_confidence = true;
};

// Draws each slot polygon, its entrance line, the entrance angle (degrees,
// relative to the ego lateral axis) and the confidence onto a copy of the
// image. Slots reaching far outside the raster are drawn clipped with a
// warning on stderr. Deterministic for fixed inputs.
cv::Mat render_overlays(const cv::Mat& image,
                        const std::vector<PolygonSlot>& slots,
                        const TopviewSpec& spec,
                        const OverlayStyle& style = {});

}  // namespace slotkit

#include "slotkit/render.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <opencv2/imgproc.hpp>

namespace slotkit {

namespace {

cv::Point to_cv(const Point2& p) {
  return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
}

}  // namespace

cv::Mat render_overlays(const cv::Mat& image,
                        const std::vector<PolygonSlot>& slots,
                        const TopviewSpec& spec, const OverlayStyle& style) {
  if (image.empty() || image.type() != CV_8UC3)
    throw std::invalid_argument("render expects an 8-bit 3-channel image");
  cv::Mat out = image.clone();

  for (const auto& slot : slots) {
    for (const auto& c : slot.corners) {
      if (c.x < -2.0 * image.cols || c.x > 3.0 * image.cols ||
          c.y < -2.0 * image.rows || c.y > 3.0 * image.rows) {
        std::cerr << "warning: slot corner far outside raster, drawing clipped\n";
        break;
      }
    }
    const auto t = slot.traversal();
    for (int i = 0; i < 4; ++i)
      cv::line(out, to_cv(t[i]), to_cv(t[(i + 1) % 4]), style.polygon_color,
               style.line_width, cv::LINE_8);
    cv::line(out, to_cv(slot.entrance_left()), to_cv(slot.entrance_right()),
             style.entrance_color, style.line_width, cv::LINE_8);

    std::ostringstream text;
    text << std::fixed << std::setprecision(2);
    if (style.draw_confidence) text << slot.confidence;
    if (style.draw_angle) {
      // Report the angle in ego-frame convention: the raster y axis points
      // down while ego forward points up, so the pixel-space angle flips sign.
      PolygonSlot ego = slot;
      for (auto& c : ego.corners) c = raster_to_ground(spec, c);
      if (style.draw_confidence) text << " ";
      text << entrance_angle(ego) << "deg";
    }
    if (!text.str().empty()) {
      const Point2 mid = (slot.entrance_left() + slot.entrance_right()) * 0.5;
      cv::putText(out, text.str(), to_cv(mid) + cv::Point(4, -4),
                  cv::FONT_HERSHEY_SIMPLEX, 0.4, style.text_color, 1, cv::LINE_8);
    }
  }
  return out;
}

}  // namespace slotkit

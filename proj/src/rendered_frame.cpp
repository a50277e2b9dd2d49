#include "mcview/rendered_frame.hpp"

#include <cmath>

namespace mcview {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::selected: return "selected";
    case Provenance::cross_view: return "cross-view";
    case Provenance::temporal: return "temporal";
    default: return "none";
  }
}

cv::Rect crop_window(const RenderedFrame& frame, cv::Size size, Vec2 shift) {
  const int x = static_cast<int>(std::lround(-shift.x - frame.canvas_origin.x));
  const int y = static_cast<int>(std::lround(-shift.y - frame.canvas_origin.y));
  return {x, y, size.width, size.height};
}

cv::Mat crop_canvas(const cv::Mat& src, cv::Rect window, const cv::Scalar& fill) {
  cv::Mat out(window.size(), src.type(), fill);
  const cv::Rect inside = window & cv::Rect(0, 0, src.cols, src.rows);
  if (inside.area() > 0) {
    src(inside).copyTo(out(cv::Rect(inside.x - window.x, inside.y - window.y, inside.width,
                                    inside.height)));
  }
  return out;
}

}  // namespace mcview

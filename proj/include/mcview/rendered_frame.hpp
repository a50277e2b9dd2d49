#pragma once

#include "mcview/common.hpp"

#include <string>

namespace mcview {

enum class Provenance : std::uint8_t { none = 0, selected = 1, cross_view = 2, temporal = 3 };

const char* to_string(Provenance p);

/// One output frame. The selected view is kept warped onto a canvas twice the
/// output size so recentring can crop it again without resampling.
struct RenderedFrame {
  int t = 0;
  int source_camera = 0;
  std::string source_id;
  int segment = 0;
  bool stale = false;

  Image canvas;       // selected view in reference coordinates, 2W x 2H
  Mask canvas_valid;
  Vec2 canvas_origin; // reference coordinate of canvas pixel (0, 0)

  Vec2 shift;         // integer offset applied by centring
  Image image;        // W x H output
  Mask validity;
  cv::Mat provenance; // CV_8UC1 of Provenance values
};

/// Output pixel (x, y) shows reference coordinate (x - shift.x, y - shift.y).
/// Returns the canvas window behind an output of `size` at `shift`.
cv::Rect crop_window(const RenderedFrame& frame, cv::Size size, Vec2 shift);

/// Copies `src` (canvas-sized) through the window, marking out-of-canvas
/// pixels with `fill`.
cv::Mat crop_canvas(const cv::Mat& src, cv::Rect window, const cv::Scalar& fill);

}  // namespace mcview

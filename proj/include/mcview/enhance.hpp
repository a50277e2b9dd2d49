#pragma once

#include "mcview/common.hpp"
#include "mcview/rendered_frame.hpp"

#include <optional>
#include <vector>

namespace mcview {

/// Exponential average of (frame centre - field centroid), clamped to
/// +-(W/2, H/2). Frames without a centroid keep the previous offset.
class CenterSmoother {
 public:
  CenterSmoother(cv::Size size, double alpha);
  Vec2 update(const std::optional<Vec2>& centroid);
  Vec2 offset() const { return state_; }

 private:
  cv::Size size_;
  double alpha_;
  Vec2 state_{};
};

struct CenterTrack {
  std::vector<Vec2> offsets;  // one per frame
  double alpha = 0.05;
  Vec2 state;                 // after the last frame
};

CenterTrack centering_offsets(const std::vector<std::optional<Vec2>>& centroids, cv::Size size,
                              double alpha);

/// Field centroid of the selected view in reference coordinates (taken on the
/// canvas, so field outside the output window still counts).
std::optional<Vec2> selected_field_centroid(const RenderedFrame& frame);

/// Shifts the frame by `offset` (rounded to whole pixels) relative to its
/// current shift by cropping the canvas again. Newly exposed pixels are invalid.
RenderedFrame apply_centering(const RenderedFrame& frame, Vec2 offset);

struct FillOptions {
  int kernel = 49;
  double sigma = 49.0 / 6.0;
  int dark_threshold = 10;       // max channel must exceed this
  int frames_per_blur_px = 10;
  int max_blur_radius = 25;
};

/// Everything observed so far, in canvas (reference) coordinates.
struct FillHistory {
  Image canvas;       // last completed value per canvas pixel
  Mask valid;
  cv::Mat last_seen;  // CV_32SC1, frame of the last direct observation

  bool empty() const { return canvas.empty(); }
};

/// Reference camera frame as seen through the output window of `frame`.
struct ReferenceView {
  Image image;
  Mask valid;
};
ReferenceView reference_view(const Image& reference_raw, const RenderedFrame& frame);

/// Cross-view alpha compositing with the reference view, then temporal
/// fallback from `history` blurred by staleness. Updates `history`.
RenderedFrame fill_missing(const RenderedFrame& frame, const ReferenceView& reference,
                           FillHistory& history, const FillOptions& options = {});

/// Alpha mask of the cross-view composite (CV_32FC1 in [0, 1]).
cv::Mat fill_alpha(const Image& image, const Mask& validity, const FillOptions& options = {});

}  // namespace mcview

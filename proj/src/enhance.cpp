#include "mcview/enhance.hpp"

#include "mcview/occlusion.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>
#include <map>

namespace mcview {

CenterSmoother::CenterSmoother(cv::Size size, double alpha) : size_(size), alpha_(alpha) {
  if (!(alpha > 0 && alpha <= 1)) throw PreconditionError("smoothing factor must lie in (0, 1]");
}

Vec2 CenterSmoother::update(const std::optional<Vec2>& centroid) {
  if (!centroid) return state_;
  const Vec2 target{size_.width / 2.0 - centroid->x, size_.height / 2.0 - centroid->y};
  state_ = state_ + alpha_ * (target - state_);
  state_.x = std::clamp(state_.x, -size_.width / 2.0, size_.width / 2.0);
  state_.y = std::clamp(state_.y, -size_.height / 2.0, size_.height / 2.0);
  return state_;
}

CenterTrack centering_offsets(const std::vector<std::optional<Vec2>>& centroids, cv::Size size,
                              double alpha) {
  CenterSmoother ema(size, alpha);
  CenterTrack track;
  track.alpha = alpha;
  for (const auto& c : centroids) track.offsets.push_back(ema.update(c));
  track.state = ema.offset();
  return track;
}

std::optional<Vec2> selected_field_centroid(const RenderedFrame& frame) {
  auto field = segment_field(frame.canvas);
  if (!frame.canvas_valid.empty()) {
    cv::bitwise_and(field.mask, frame.canvas_valid, field.mask);
  }
  const auto m = cv::moments(field.mask, true);
  if (m.m00 <= 0) return std::nullopt;
  return Vec2{m.m10 / m.m00 + frame.canvas_origin.x, m.m01 / m.m00 + frame.canvas_origin.y};
}

RenderedFrame apply_centering(const RenderedFrame& frame, Vec2 offset) {
  const cv::Size size = frame.image.size();
  const Vec2 shift{std::round(frame.shift.x + offset.x), std::round(frame.shift.y + offset.y)};
  if (std::abs(shift.x) > size.width / 2.0 || std::abs(shift.y) > size.height / 2.0) {
    throw PreconditionError("centring offset exceeds half the frame size");
  }
  RenderedFrame out = frame;
  out.shift = shift;
  const auto window = crop_window(frame, size, shift);
  out.image = crop_canvas(frame.canvas, window, cv::Scalar::all(0));
  out.validity = crop_canvas(frame.canvas_valid, window, cv::Scalar(0));
  out.provenance = cv::Mat(size, CV_8UC1, cv::Scalar(0));
  out.provenance.setTo(static_cast<int>(Provenance::selected), out.validity);
  return out;
}

ReferenceView reference_view(const Image& reference_raw, const RenderedFrame& frame) {
  // The reference camera sits unwarped at reference coordinates [0,W)x[0,H).
  const cv::Size size = frame.image.size();
  const int dx = static_cast<int>(std::lround(frame.shift.x));
  const int dy = static_cast<int>(std::lround(frame.shift.y));
  const cv::Rect window(-dx, -dy, size.width, size.height);
  ReferenceView view;
  view.image = crop_canvas(reference_raw, window, cv::Scalar::all(0));
  view.valid = crop_canvas(Mask(reference_raw.size(), CV_8UC1, cv::Scalar(255)), window,
                           cv::Scalar(0));
  return view;
}

cv::Mat fill_alpha(const Image& image, const Mask& validity, const FillOptions& options) {
  cv::Mat binary(image.size(), CV_32FC1, cv::Scalar(0));
  for (int y = 0; y < image.rows; ++y) {
    const auto* p = image.ptr<cv::Vec3b>(y);
    const auto* v = validity.ptr<std::uint8_t>(y);
    auto* b = binary.ptr<float>(y);
    for (int x = 0; x < image.cols; ++x) {
      const int mx = std::max({p[x][0], p[x][1], p[x][2]});
      b[x] = (v[x] && mx > options.dark_threshold) ? 1.0F : 0.0F;
    }
  }
  cv::Mat alpha;
  cv::GaussianBlur(binary, alpha, cv::Size(options.kernel, options.kernel), options.sigma,
                   options.sigma, cv::BORDER_REFLECT);
  alpha = alpha.mul(binary);
  for (int y = 0; y < alpha.rows; ++y) {
    auto* a = alpha.ptr<float>(y);
    for (int x = 0; x < alpha.cols; ++x) {
      if (a[x] >= 1.0F - 1e-6F) a[x] = 1.0F;
      a[x] = std::clamp(a[x], 0.0F, 1.0F);
    }
  }
  return alpha;
}

namespace {

// Blur of `img` restricted to `valid` pixels (normalised by the blurred mask).
cv::Mat masked_blur(const Image& img, const Mask& valid, int radius) {
  cv::Mat f, w;
  img.convertTo(f, CV_32FC3);
  valid.convertTo(w, CV_32FC1, 1.0 / 255.0);
  cv::Mat w3;
  cv::merge(std::vector<cv::Mat>{w, w, w}, w3);
  f = f.mul(w3);
  const int k = 2 * radius + 1;
  const double sigma = k / 6.0;
  cv::GaussianBlur(f, f, cv::Size(k, k), sigma, sigma, cv::BORDER_REPLICATE);
  cv::GaussianBlur(w, w, cv::Size(k, k), sigma, sigma, cv::BORDER_REPLICATE);
  cv::Mat out(img.size(), CV_8UC3);
  for (int y = 0; y < img.rows; ++y) {
    const auto* s = f.ptr<cv::Vec3f>(y);
    const auto* n = w.ptr<float>(y);
    auto* d = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        d[x][c] = n[x] > 1e-6F ? cv::saturate_cast<std::uint8_t>(s[x][c] / n[x]) : 0;
      }
    }
  }
  return out;
}

void observe(FillHistory& h, const Image& img, const Mask& valid, cv::Rect at, int t) {
  const cv::Rect inside = at & cv::Rect(0, 0, h.canvas.cols, h.canvas.rows);
  if (inside.area() <= 0) return;
  const cv::Rect src(inside.x - at.x, inside.y - at.y, inside.width, inside.height);
  img(src).copyTo(h.canvas(inside), valid(src));
  h.valid(inside).setTo(255, valid(src));
  h.last_seen(inside).setTo(t, valid(src));
}

}  // namespace

RenderedFrame fill_missing(const RenderedFrame& frame, const ReferenceView& reference,
                           FillHistory& history, const FillOptions& options) {
  const cv::Size size = frame.image.size();
  const auto window = crop_window(frame, size, frame.shift);
  if (history.empty()) {
    history.canvas = Image::zeros(frame.canvas.size(), CV_8UC3);
    history.valid = Mask::zeros(frame.canvas.size(), CV_8UC1);
    history.last_seen = cv::Mat(frame.canvas.size(), CV_32SC1, cv::Scalar(0));
  }

  const cv::Mat alpha = fill_alpha(frame.image, frame.validity, options);
  RenderedFrame out = frame;
  out.image = Image(size, CV_8UC3, cv::Scalar::all(0));
  out.provenance = cv::Mat(size, CV_8UC1, cv::Scalar(0));

  const auto hist_img = crop_canvas(history.canvas, window, cv::Scalar::all(0));
  const auto hist_valid = crop_canvas(history.valid, window, cv::Scalar(0));
  const auto hist_seen = crop_canvas(history.last_seen, window, cv::Scalar(0));

  // radius -> pixels that need that much temporal blur
  std::map<int, std::vector<cv::Point>> temporal;
  for (int y = 0; y < size.height; ++y) {
    const auto* f = frame.image.ptr<cv::Vec3b>(y);
    const auto* fv = frame.validity.ptr<std::uint8_t>(y);
    const auto* r = reference.image.ptr<cv::Vec3b>(y);
    const auto* rv = reference.valid.ptr<std::uint8_t>(y);
    const auto* a = alpha.ptr<float>(y);
    auto* o = out.image.ptr<cv::Vec3b>(y);
    auto* p = out.provenance.ptr<std::uint8_t>(y);
    for (int x = 0; x < size.width; ++x) {
      if (a[x] == 1.0F || (fv[x] && !rv[x])) {
        o[x] = f[x];
        p[x] = static_cast<std::uint8_t>(Provenance::selected);
      } else if (rv[x]) {
        for (int c = 0; c < 3; ++c) {
          o[x][c] = cv::saturate_cast<std::uint8_t>(a[x] * f[x][c] + (1.0F - a[x]) * r[x][c]);
        }
        p[x] = static_cast<std::uint8_t>(Provenance::cross_view);
      } else if (hist_valid.at<std::uint8_t>(y, x)) {
        const int age = frame.t - hist_seen.at<int>(y, x);
        const int radius =
            std::clamp(age / std::max(1, options.frames_per_blur_px), 0, options.max_blur_radius);
        temporal[radius].emplace_back(x, y);
      }
    }
  }

  for (const auto& [radius, pixels] : temporal) {
    cv::Rect box = cv::boundingRect(pixels);
    const cv::Rect padded =
        cv::Rect(box.x - radius, box.y - radius, box.width + 2 * radius, box.height + 2 * radius) &
        cv::Rect(0, 0, size.width, size.height);
    const cv::Mat blurred =
        radius == 0 ? hist_img(padded) : masked_blur(hist_img(padded), hist_valid(padded), radius);
    for (const auto& q : pixels) {
      out.image.at<cv::Vec3b>(q) = blurred.at<cv::Vec3b>(q.y - padded.y, q.x - padded.x);
      out.provenance.at<std::uint8_t>(q) = static_cast<std::uint8_t>(Provenance::temporal);
    }
  }

  out.validity = Mask();
  cv::compare(out.provenance, static_cast<int>(Provenance::none), out.validity, cv::CMP_NE);

  // History: the whole selected canvas, then the completed window on top.
  const auto t = frame.t;
  Mask bright;
  {
    cv::Mat mx;
    std::vector<cv::Mat> ch;
    cv::split(frame.canvas, ch);
    cv::max(ch[0], ch[1], mx);
    cv::max(mx, ch[2], mx);
    cv::compare(mx, options.dark_threshold, bright, cv::CMP_GT);
    cv::bitwise_and(bright, frame.canvas_valid, bright);
  }
  observe(history, frame.canvas, bright, cv::Rect(0, 0, frame.canvas.cols, frame.canvas.rows), t);

  Mask direct;
  cv::inRange(out.provenance, static_cast<int>(Provenance::selected),
              static_cast<int>(Provenance::cross_view), direct);
  observe(history, out.image, direct, window, t);
  Mask held;
  cv::compare(out.provenance, static_cast<int>(Provenance::temporal), held, cv::CMP_EQ);
  {
    const cv::Rect inside = window & cv::Rect(0, 0, history.canvas.cols, history.canvas.rows);
    if (inside.area() > 0) {
      const cv::Rect src(inside.x - window.x, inside.y - window.y, inside.width, inside.height);
      out.image(src).copyTo(history.canvas(inside), held(src));
    }
  }
  return out;
}

}  // namespace mcview

#include "mcview/metrics.hpp"

#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

namespace mcview {

namespace fs = std::filesystem;

double psnr(const Image& a, const Image& b, double cap) {
  if (a.size() != b.size() || a.type() != b.type()) {
    throw PreconditionError("psnr: image dimensions differ");
  }
  double sse = 0;
  const int values = a.cols * a.channels();
  for (int y = 0; y < a.rows; ++y) {
    const auto* p = a.ptr<std::uint8_t>(y);
    const auto* q = b.ptr<std::uint8_t>(y);
    std::int64_t row = 0;
    for (int x = 0; x < values; ++x) {
      const int d = static_cast<int>(p[x]) - static_cast<int>(q[x]);
      row += d * d;
    }
    sse += static_cast<double>(row);
  }
  const double mse = sse / (static_cast<double>(a.total()) * a.channels());
  if (mse <= 0) return cap;
  return std::min(cap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double itf(const std::vector<Image>& frames, double cap) {
  if (frames.size() < 2) throw PreconditionError("fewer than 2 frames");
  double sum = 0;
  for (std::size_t j = 0; j + 1 < frames.size(); ++j) sum += psnr(frames[j], frames[j + 1], cap);
  return sum / static_cast<double>(frames.size() - 1);
}

SpeedResult avspeed_from_keypoints(const std::vector<std::vector<Keypoint>>& keypoints,
                                   const MatchOptions& matcher) {
  SpeedResult out;
  if (keypoints.size() < 2) throw PreconditionError("fewer than 2 frames");
  std::vector<int> prev_track(keypoints[0].size(), -1);
  std::vector<int> length;
  double sum = 0;
  for (std::size_t j = 0; j + 1 < keypoints.size(); ++j) {
    const auto& a = keypoints[j];
    const auto& b = keypoints[j + 1];
    std::vector<int> next_track(b.size(), -1);
    for (const auto& [i, k] : match(a, b, matcher)) {
      int id = prev_track[static_cast<std::size_t>(i)];
      if (id < 0) {
        id = static_cast<int>(length.size());
        length.push_back(1);
      }
      ++length[static_cast<std::size_t>(id)];
      next_track[static_cast<std::size_t>(k)] = id;
      sum += norm(b[static_cast<std::size_t>(k)].position - a[static_cast<std::size_t>(i)].position);
      ++out.steps;
    }
    prev_track = std::move(next_track);
  }
  out.tracked_points = static_cast<int>(length.size());
  if (out.steps > 0) out.avspeed = sum / static_cast<double>(out.steps);
  return out;
}

SpeedResult avspeed(const std::vector<Image>& frames, const DetectorOptions& detector,
                    const MatchOptions& matcher) {
  if (frames.size() < 2) throw PreconditionError("fewer than 2 frames");
  std::vector<std::vector<Keypoint>> keypoints;
  keypoints.reserve(frames.size());
  for (const auto& f : frames) keypoints.push_back(detect(f, detector));
  return avspeed_from_keypoints(keypoints, matcher);
}

MetricsAccumulator::MetricsAccumulator(DetectorOptions detector, MatchOptions matcher, double cap)
    : detector_(detector), matcher_(matcher), cap_(cap) {}

void MetricsAccumulator::add(const Image& frame) {
  auto points = detect(frame, detector_);
  std::vector<int> track(points.size(), -1);
  if (frames_ > 0) {
    psnr_sum_ += psnr(previous_, frame, cap_);
    for (const auto& [i, k] : match(previous_points_, points, matcher_)) {
      int id = previous_track_[static_cast<std::size_t>(i)];
      if (id < 0) {
        id = static_cast<int>(track_length_.size());
        track_length_.push_back(1);
      }
      ++track_length_[static_cast<std::size_t>(id)];
      track[static_cast<std::size_t>(k)] = id;
      distance_sum_ += norm(points[static_cast<std::size_t>(k)].position -
                            previous_points_[static_cast<std::size_t>(i)].position);
      ++steps_;
    }
  }
  previous_ = frame.clone();
  previous_points_ = std::move(points);
  previous_track_ = std::move(track);
  ++frames_;
}

MetricsReport MetricsAccumulator::report() const {
  if (frames_ < 2) throw PreconditionError("fewer than 2 frames");
  MetricsReport r;
  r.itf_db = psnr_sum_ / (frames_ - 1);
  if (steps_ > 0) r.avspeed = distance_sum_ / static_cast<double>(steps_);
  r.frames_evaluated = frames_;
  r.tracked_points = static_cast<int>(track_length_.size());
  r.psnr_cap = cap_;
  return r;
}

MetricsReport evaluate_frames(const std::vector<Image>& frames) {
  MetricsAccumulator acc;
  for (const auto& f : frames) acc.add(f);
  return acc.report();
}

std::vector<Image> read_frame_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a frame directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> frames;
  for (const auto& f : files) {
    Image img = cv::imread(f.string(), cv::IMREAD_COLOR);
    if (img.empty()) throw Error("cannot decode " + f.string());
    frames.push_back(std::move(img));
  }
  return frames;
}

Comparison compare(const MetricsReport& a, const MetricsReport& b) {
  Comparison c{a, b, 0.0, std::nullopt};
  c.itf_ratio = b.itf_db > 0 ? a.itf_db / b.itf_db : 0.0;
  if (a.avspeed && b.avspeed && *b.avspeed > 0) c.avspeed_ratio = *a.avspeed / *b.avspeed;
  if (a.avspeed && b.avspeed && *b.avspeed == 0 && *a.avspeed == 0) c.avspeed_ratio = 1.0;
  return c;
}

}  // namespace mcview

#pragma once

#include "mcview/common.hpp"
#include "mcview/features.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace mcview {

constexpr double kPsnrCap = 100.0;

/// 10 log10(255^2 / MSE) over all channels, capped (identical images give the cap).
double psnr(const Image& a, const Image& b, double cap = kPsnrCap);

/// Mean PSNR of consecutive frames.
double itf(const std::vector<Image>& frames, double cap = kPsnrCap);

struct SpeedResult {
  std::optional<double> avspeed;  // px/frame; empty when nothing could be tracked
  int tracked_points = 0;         // tracks spanning at least two frames
  std::size_t steps = 0;          // frame-to-frame displacements summed
};

/// Links per-pair matches into tracks and averages the per-step displacement.
SpeedResult avspeed_from_keypoints(const std::vector<std::vector<Keypoint>>& keypoints,
                                   const MatchOptions& matcher = {});
SpeedResult avspeed(const std::vector<Image>& frames, const DetectorOptions& detector = {},
                    const MatchOptions& matcher = {});

struct MetricsReport {
  double itf_db = 0.0;
  std::optional<double> avspeed;
  int frames_evaluated = 0;
  int tracked_points = 0;
  double psnr_cap = kPsnrCap;
};

/// Consumes frames in order without keeping the whole video.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(DetectorOptions detector = {}, MatchOptions matcher = {},
                              double cap = kPsnrCap);
  void add(const Image& frame);
  MetricsReport report() const;  // throws PreconditionError below two frames

 private:
  DetectorOptions detector_;
  MatchOptions matcher_;
  double cap_;
  int frames_ = 0;
  double psnr_sum_ = 0.0;
  Image previous_;
  std::vector<Keypoint> previous_points_;
  std::vector<int> previous_track_;  // track id of each previous keypoint
  std::vector<int> track_length_;    // observations per track
  double distance_sum_ = 0.0;
  std::size_t steps_ = 0;
};

MetricsReport evaluate_frames(const std::vector<Image>& frames);

/// Frames of a directory (*.png sorted by name).
std::vector<Image> read_frame_directory(const std::filesystem::path& dir);

struct Comparison {
  MetricsReport a;
  MetricsReport b;
  double itf_ratio = 0.0;                // a / b
  std::optional<double> avspeed_ratio;   // a / b
};

Comparison compare(const MetricsReport& a, const MetricsReport& b);

}  // namespace mcview

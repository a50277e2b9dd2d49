#pragma once

#include "mcview/common.hpp"
#include "mcview/features.hpp"
#include "mcview/geometry.hpp"
#include "mcview/ingest.hpp"
#include "mcview/isolation_forest.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mcview {

struct DomSample {
  int t = 0;
  std::optional<double> value;  // empty = no correspondences
};

struct DomSeries {
  std::vector<DomSample> samples;
  int stride = 30;
  std::vector<bool> inlier;                    // after outlier filtering
  std::vector<std::optional<double>> smoothed; // defined on inliers only

  std::size_t size() const { return samples.size(); }
};

/// Mean transfer error ||H_{c->c'}(p) - p'|| over every correspondence of
/// every camera pair, with H_{c->c'} taken from the atlas. Empty when there
/// are no correspondences.
std::optional<double> degree_of_misalignment(const MatchSet& matches,
                                             const HomographyAtlas& atlas);

struct DomOptions {
  DetectorOptions detector{};
  MatchOptions matcher{};
  // Fresh matches are kept only if consistent with a homography fitted to the
  // same frame's matches, so mismatches do not swamp the mean.
  bool verify = true;
  RansacOptions ransac{};
  int min_pair_matches = 8;
};

/// Drops pairs with too few matches and, when verifying, every match that is
/// an outlier to a RANSAC homography of its own pair.
MatchSet verified_matches(const MatchSet& fresh, const DomOptions& options, std::uint64_t salt);

/// Matches the raw views of one frame afresh and scores them against the atlas.
std::optional<double> dom_at(const FrameStack& stack, const HomographyAtlas& atlas,
                             const DomOptions& options = {}, int threads = 1);

/// Samples frames range.first, range.first + stride, ... <= range.last.
DomSeries dom_series(const FrameSource& source, FrameRange range, int stride,
                     const HomographyAtlas& atlas, const DomOptions& options = {},
                     int threads = 1);

/// Flags spikes with an isolation forest fitted on the residuals of a running
/// median (`median_window` samples), so sustained level changes stay inliers.
void filter_outliers(DomSeries& series, const IsolationForestOptions& options = {},
                     int median_window = 5);

/// Centred moving average over inlier samples (missing ones skipped).
DomSeries smooth(const DomSeries& series, int window);

/// min(max + 1, 2 * mean) of the values; 0 for an empty list.
double threshold(const std::vector<double>& values);

struct MovementOptions {
  double m_seconds = 75.0;
  int exceed_count = 4;
  double window_seconds = 600.0;  // span of the trailing threshold window
};

struct MovementEvent {
  int t_mov = 0;
  FrameRange interval;  // voting interval that produced the event
  int exceedances = 0;
  double tau = 0.0;
};

/// Voting over m-second intervals starting at the first sample. Each interval
/// compares its smoothed samples against the threshold of the smoothed inliers
/// in the trailing window ending with the interval. Qualifying intervals whose
/// medians lie within one interval of the previous qualifying one belong to
/// the same move.
std::vector<MovementEvent> detect_movement_events(const DomSeries& series, double fps,
                                                  const MovementOptions& options = {});

std::vector<int> detect_movements(const DomSeries& series, double fps, double m_seconds = 75.0,
                                  int exceed_count = 4);

struct Segment {
  int first = 1;
  int last = 1;
  int atlas_id = 0;
  bool stale = false;  // between a move and the next calibration
};

struct Timeline {
  std::vector<int> movement_events;
  std::vector<int> calibration_points;  // t_hom of atlas k+1
  std::vector<Segment> segments;
  std::vector<int> below_design_rate;  // moves within ten minutes of the previous one
  std::vector<std::string> warnings;
  int frame_count = 0;
  double fps = 30.0;

  const Segment& segment_at(int t) const;
};

/// calibration_points[k] is the t_hom found after movements[k] (nullopt when
/// the stream ended first).
Timeline build_timeline(int frame_count, double fps, const std::vector<int>& movements,
                        const std::vector<std::optional<int>>& calibration_points);
Timeline build_timeline(const Manifest& manifest, const std::vector<int>& movements,
                        const std::vector<std::optional<int>>& calibration_points);

void write_timeline(const Timeline& timeline, const std::filesystem::path& path);
Timeline read_timeline(const std::filesystem::path& path);

void write_dom_csv(const DomSeries& series, const std::filesystem::path& path);

}  // namespace mcview

#pragma once

#include "mcview/common.hpp"
#include "mcview/ingest.hpp"

#include <array>
#include <map>
#include <utility>
#include <vector>

namespace mcview {

/// 4x4 spatial cells x 8 gradient-orientation bins, quantised to bytes.
using Descriptor = std::array<std::uint8_t, 128>;

struct Keypoint {
  Vec2 position;          // sub-pixel image coordinates
  float response = 0.0F;  // Harris corner strength
  float angle = 0.0F;     // dominant gradient orientation, radians
  Descriptor descriptor{};
};

struct DetectorOptions {
  int max_points = 1000;
  double harris_k = 0.04;
  double relative_threshold = 0.01;  // fraction of the strongest response
  int nms_radius = 2;
};

/// Harris corners refined to sub-pixel precision, with rotation-normalised
/// gradient-histogram descriptors. Sorted by descending response.
std::vector<Keypoint> detect(const Image& image, const DetectorOptions& options = {});

/// Convenience overload: detect(image, {max_points}).
std::vector<Keypoint> detect(const Image& image, int max_points);

struct MatchOptions {
  double ratio = 0.8;
  bool mutual = true;
};

using IndexPair = std::pair<int, int>;

/// One-to-one matches (index into a, index into b). The ratio test is applied
/// in both directions, so match(b, a) is the transpose of match(a, b).
std::vector<IndexPair> match(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                             const MatchOptions& options = {});

int descriptor_distance2(const Descriptor& a, const Descriptor& b);

struct Correspondence {
  Vec2 a;  // point in the lower-indexed camera
  Vec2 b;  // matching point in the higher-indexed camera
};

struct FrameRange {
  int first = 1;
  int last = 1;  // inclusive
};

using CameraPair = std::pair<int, int>;  // always first < second

/// Correspondences between unordered camera pairs pooled over a frame window.
struct MatchSet {
  std::map<CameraPair, std::vector<Correspondence>> pairs;
  FrameRange window;
  int frames_used = 0;

  std::size_t per_pair_count(int c1, int c2) const;
  std::size_t total() const;

  /// Correspondences oriented from camera `from` to camera `to`.
  std::vector<Correspondence> oriented(int from, int to) const;
};

/// Thrown when a calibration-chain pair has too few correspondences.
class InsufficientCorrespondences : public Error {
 public:
  InsufficientCorrespondences(int c1, int c2, const std::string& what)
      : Error(what), first(c1), second(c2) {}
  int first;
  int second;
};

struct AccumulateOptions {
  DetectorOptions detector{};
  MatchOptions matcher{};
  int min_matches = 12;
  double dedup_bin = 4.0;  // px
};

/// Matches every camera pair within one frame stack.
MatchSet match_stack(const FrameStack& stack, const DetectorOptions& detector = {},
                     const MatchOptions& matcher = {}, int threads = 1);

/// Pools matches from frames window.first, window.first + stride, ... up to
/// window.last, dropping correspondences whose endpoints fall into an already
/// occupied (dedup_bin x dedup_bin) cell pair. Throws
/// InsufficientCorrespondences when some camera has neither a direct pair with
/// the reference nor a one-hop chain with at least min_matches on each link.
MatchSet accumulate_matches(const FrameSource& source, FrameRange window, int stride,
                            const AccumulateOptions& options = {}, int threads = 1);

/// Chain check used by accumulate_matches; exposed for callers that build
/// match sets by other means.
void require_calibration_chain(const MatchSet& matches, int camera_count, int reference,
                               int min_matches, const std::vector<std::string>& ids = {});

}  // namespace mcview

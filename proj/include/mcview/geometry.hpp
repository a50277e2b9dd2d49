#pragma once

#include "mcview/common.hpp"
#include "mcview/features.hpp"
#include "mcview/ingest.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace mcview {

/// Planar projective map. The matrix is normalised so that the bottom-right
/// entry is 1 whenever it is non-zero (otherwise to unit Frobenius norm).
class Homography {
 public:
  Homography();
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography identity() { return {}; }
  static Homography translation(double dx, double dy);

  const Eigen::Matrix3d& matrix() const { return m_; }
  Vec2 apply(Vec2 p) const;
  Homography inverse() const;
  bool is_identity(double tol = 0.0) const;

  /// Composition: (a * b).apply(p) == a.apply(b.apply(p)).
  friend Homography operator*(const Homography& a, const Homography& b);

 private:
  Eigen::Matrix3d m_;
};

/// Raised for point configurations that do not determine a homography.
class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

struct RansacOptions {
  double threshold = 3.0;  // px, forward transfer error
  int max_iterations = 2000;
  double confidence = 0.995;
  std::uint64_t seed = 0;
};

struct HomographyEstimate {
  Homography h;
  std::vector<bool> inliers;
  int inlier_count = 0;
  double mean_error = 0.0;  // over inliers, px
};

/// Normalised DLT inside RANSAC, then Levenberg-Marquardt on the inliers.
/// Maps each correspondence's `a` onto its `b`.
HomographyEstimate estimate_homography(const std::vector<Correspondence>& correspondences,
                                       const RansacOptions& options = {});

/// Plain normalised DLT over all correspondences (no outlier rejection).
Homography fit_homography_dlt(const std::vector<Correspondence>& correspondences);

struct PairStats {
  int from = 0;
  int to = 0;
  int inliers = 0;
  double mean_error = 0.0;
};

/// Warps of every camera into the reference camera's image coordinates for
/// one stationary segment.
struct HomographyAtlas {
  int segment_id = 0;
  int reference = 0;
  std::vector<std::string> camera_ids;
  std::vector<Homography> to_reference;  // indexed by camera
  std::vector<std::string> routes;       // "reference", "direct" or "via <id>"
  std::vector<PairStats> stats;
  int calibration_frame = 0;             // first frame of the calibration window

  int camera_count() const { return static_cast<int>(to_reference.size()); }

  /// H_{from -> to} = to_reference[to]^-1 * to_reference[from].
  Homography between(int from, int to) const;

  static HomographyAtlas identity(int camera_count, int reference,
                                  std::vector<std::string> ids = {});
};

class CalibrationFailed : public Error {
 public:
  CalibrationFailed(int cam, const std::string& what) : Error(what), camera(cam) {}
  int camera;
};

struct AtlasOptions {
  RansacOptions ransac{};
  int min_inliers = 12;
};

/// Estimates every camera's warp to `reference`, directly when the pair has
/// enough inliers and otherwise through the best one-hop intermediate.
HomographyAtlas build_atlas(const MatchSet& matches, int camera_count, int reference,
                            const std::vector<std::string>& camera_ids = {},
                            const AtlasOptions& options = {});

struct WarpResult {
  Image image;  // CV_8UC3, black where invalid
  Mask valid;   // CV_8UC1, 255 where a source preimage exists
};

/// Bilinear inverse warp of `image` by `h` (source -> target coordinates).
/// Canvas pixel (u, v) shows target coordinate (u + origin.x, v + origin.y).
WarpResult warp(const Image& image, const Homography& h, cv::Size canvas, Vec2 origin = {},
                int threads = 1);

/// Canvas used before recentring: twice the source size, centred on it.
struct DoubleCanvas {
  cv::Size size;
  Vec2 origin;
  static DoubleCanvas around(cv::Size source) {
    return {cv::Size(2 * source.width, 2 * source.height),
            Vec2{-source.width / 2.0, -source.height / 2.0}};
  }
};

struct AlignedStack {
  int t = 0;
  std::vector<Image> images;
  std::vector<Mask> valid;
};

/// Warps every view of the stack into reference coordinates (same size).
AlignedStack apply_atlas(const FrameStack& stack, const HomographyAtlas& atlas, int threads = 1);

void write_atlas(const HomographyAtlas& atlas, const std::filesystem::path& path);
HomographyAtlas read_atlas(const std::filesystem::path& path);

}  // namespace mcview

#pragma once

#include "mcview/common.hpp"
#include "mcview/geometry.hpp"
#include "mcview/features.hpp"
#include "mcview/ingest.hpp"

#include <filesystem>
#include <random>

namespace mcview::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

// Smooth random texture with plenty of corners.
Image textured_image(cv::Size size, std::uint64_t seed);
Image solid(cv::Size size, cv::Scalar bgr);

// Random well-conditioned perspective map near identity for a size x size image.
Homography random_homography(std::mt19937_64& rng, double size = 400.0, double strength = 1.0);

// Writes a manifest with `frames` identical copies of per-camera images.
std::filesystem::path write_manifest_dir(const std::filesystem::path& dir,
                                         const std::vector<Image>& cameras, int frames,
                                         double fps = 30.0);

// In-memory source serving fixed images per camera (same for every frame).
class StaticSource final : public FrameSource {
 public:
  StaticSource(std::vector<Image> cameras, int frames, double fps = 30.0);
  const std::vector<std::string>& camera_ids() const override { return ids_; }
  int frame_count() const override { return frames_; }
  double fps() const override { return fps_; }
  int reference_index() const override { return 0; }
  cv::Size frame_size() const override { return cameras_.front().size(); }
  Image image(int camera, int t) const override;

 private:
  std::vector<Image> cameras_;
  std::vector<std::string> ids_;
  int frames_;
  double fps_;
};

double max_abs_diff(const cv::Mat& a, const cv::Mat& b);
bool identical(const cv::Mat& a, const cv::Mat& b);

// Brute-force metric oracles: per-pixel loops, no shared code with the library
// beyond the keypoint matcher.
double oracle_psnr(const Image& a, const Image& b, double cap = 100.0);
double oracle_itf(const std::vector<Image>& frames, double cap = 100.0);
struct SpeedOracle {
  double avspeed = 0;  // 0 when nothing matched
  std::size_t steps = 0;
  int tracks = 0;
};
// Every match between consecutive frames is one step of one track; a track
// starts wherever its source point was not reached by the previous step.
SpeedOracle oracle_avspeed(const std::vector<std::vector<Keypoint>>& keypoints);

// Short jittered, noisy clip of one texture.
std::vector<Image> random_video(std::mt19937_64& rng);

}  // namespace mcview::testing

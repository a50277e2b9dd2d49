#pragma once

#include "mcview/common.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace mcview {

/// Validated description of one multi-camera recording on disk.
///
/// The manifest is a JSON document:
///
///   {
///     "cameras":   [{"id": "cam1", "dir": "cam1"}, ...],
///     "fps":       30,
///     "reference": "cam1",
///     "frames":    1800
///   }
///
/// Camera directories are resolved relative to the manifest file and hold
/// frames named `<index:06d>.png`, starting at 000001.png.
struct Manifest {
  std::vector<std::string> camera_ids;
  std::vector<std::filesystem::path> frame_dirs;
  double fps = 30.0;
  std::string reference_camera;
  int frame_count = 0;

  int camera_count() const { return static_cast<int>(camera_ids.size()); }
  int reference_index() const;
  std::filesystem::path frame_path(int camera, int t) const;
};

/// Reads and validates a manifest. Errors name the offending camera.
Manifest load_manifest(const std::filesystem::path& path);

/// Writes `manifest` as JSON; directories are stored relative to the
/// manifest's own directory when possible.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// The N_cam synchronized images at one frame index (1-based).
struct FrameStack {
  int t = 0;
  std::vector<Image> images;

  int camera_count() const { return static_cast<int>(images.size()); }
  cv::Size size() const { return images.empty() ? cv::Size{} : images.front().size(); }
};

/// Read-only access to a synchronized multi-camera sequence. Implementations
/// must be safe to query concurrently.
class FrameSource {
 public:
  virtual ~FrameSource() = default;

  virtual const std::vector<std::string>& camera_ids() const = 0;
  virtual int frame_count() const = 0;
  virtual double fps() const = 0;
  virtual int reference_index() const = 0;
  virtual cv::Size frame_size() const = 0;

  /// Decoded image of `camera` (0-based) at frame `t` (1-based).
  virtual Image image(int camera, int t) const = 0;

  int camera_count() const { return static_cast<int>(camera_ids().size()); }

  /// All cameras at frame t; throws PreconditionError when t is out of range.
  FrameStack stack(int t, int threads = 1) const;
};

/// FrameSource backed by PNG frames listed in a manifest.
class ManifestSource final : public FrameSource {
 public:
  explicit ManifestSource(Manifest manifest);

  const std::vector<std::string>& camera_ids() const override { return manifest_.camera_ids; }
  int frame_count() const override { return manifest_.frame_count; }
  double fps() const override { return manifest_.fps; }
  int reference_index() const override { return manifest_.reference_index(); }
  cv::Size frame_size() const override { return size_; }
  Image image(int camera, int t) const override;

  const Manifest& manifest() const { return manifest_; }

 private:
  Manifest manifest_;
  cv::Size size_;
};

/// Loads the FrameStack at index t of a manifest-backed recording.
FrameStack frame_stack(const Manifest& manifest, int t);

// --- colour space -----------------------------------------------------------

/// One HSV triple on the 8-bit convention: hue in half-degrees [0,180),
/// saturation and value in [0,255].
struct Hsv {
  double hue = 0.0;  // continuous half-degrees
  int saturation = 0;
  int value = 0;

  /// Hue rounded onto the integer 0..179 scale.
  int hue_index() const;
};

struct Rgb {
  int r = 0;
  int g = 0;
  int b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

Hsv to_hsv(Rgb rgb);
Rgb to_rgb(const Hsv& hsv);

/// Per-pixel HSV planes of an image. `hue` is the integer 0..179 plane used
/// for segmentation; `hue_exact` keeps the unrounded half-degree value so the
/// conversion can be inverted without quantisation loss. Achromatic pixels
/// (saturation 0) carry hue 0.
struct HsvImage {
  cv::Mat hue;        // CV_8UC1, [0,179]
  cv::Mat hue_exact;  // CV_32FC1, [0,180)
  cv::Mat saturation; // CV_8UC1
  cv::Mat value;      // CV_8UC1

  cv::Size size() const { return hue.size(); }
};

/// Converts an 8-bit BGR image.
HsvImage to_hsv(const Image& bgr);

/// Inverse of to_hsv; returns an 8-bit BGR image.
Image to_bgr(const HsvImage& hsv);

}  // namespace mcview

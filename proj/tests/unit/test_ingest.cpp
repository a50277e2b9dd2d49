#include "mcview/ingest.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <opencv2/imgproc.hpp>

#include <fstream>
#include <random>

using namespace mcview;
using namespace mcview::testing;
namespace fs = std::filesystem;

namespace {

std::vector<Image> cameras(int n, cv::Size size) {
  std::vector<Image> out;
  for (int c = 0; c < n; ++c) out.push_back(textured_image(size, 100 + c));
  return out;
}

}  // namespace

TEST(LoadManifest, EchoesCamerasAndFrames) {
  TempDir dir("ingest_echo");
  const auto path = write_manifest_dir(dir.path(), cameras(5, {32, 24}), 12);
  const auto m = load_manifest(path);
  EXPECT_EQ(m.camera_count(), 5);
  EXPECT_EQ(m.frame_count, 12);
  EXPECT_EQ(m.reference_index(), 0);
  EXPECT_DOUBLE_EQ(m.fps, 30.0);
}

TEST(LoadManifest, FrameCountMismatchNamesTheProblem) {
  TempDir dir("ingest_mismatch");
  const auto path = write_manifest_dir(dir.path(), cameras(5, {32, 24}), 6);
  fs::remove(dir.path() / "cam3" / "000006.png");
  try {
    load_manifest(path);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("frame count mismatch"), std::string::npos);
  }
}

TEST(LoadManifest, UnknownReference) {
  TempDir dir("ingest_ref");
  const auto path = write_manifest_dir(dir.path(), cameras(3, {32, 24}), 2);
  auto m = load_manifest(path);
  m.reference_camera = "cam9";
  save_manifest(m, path);
  try {
    load_manifest(path);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unknown reference"), std::string::npos);
  }
}

TEST(LoadManifest, UnreadableOrMalformed) {
  TempDir dir("ingest_bad");
  EXPECT_THROW(load_manifest(dir / "nope.json"), Error);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_manifest(dir / "bad.json"), Error);
}

TEST(FrameStack, FirstLastAndOutOfRange) {
  TempDir dir("ingest_stack");
  const auto imgs = cameras(5, {32, 24});
  const auto m = load_manifest(write_manifest_dir(dir.path(), imgs, 4));
  const auto first = frame_stack(m, 1);
  EXPECT_EQ(first.camera_count(), 5);
  EXPECT_TRUE(identical(first.images[2], imgs[2]));
  EXPECT_EQ(frame_stack(m, 4).t, 4);
  EXPECT_THROW(frame_stack(m, 0), PreconditionError);
  EXPECT_THROW(frame_stack(m, 5), PreconditionError);
}

TEST(FrameStack, DimensionMismatchIsReported) {
  TempDir dir("ingest_dims");
  auto imgs = cameras(3, {32, 24});
  imgs[1] = textured_image({30, 24}, 9);
  const auto m = load_manifest(write_manifest_dir(dir.path(), imgs, 2));
  ManifestSource src(m);
  EXPECT_THROW(src.stack(1), Error);
}

// Property: across random manifests every stack has uniform image sizes.
TEST(FrameStack, PropertyUniformDimensions) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    TempDir dir("ingest_prop");
    const int n = 2 + static_cast<int>(rng() % 4);
    const cv::Size size(8 + static_cast<int>(rng() % 20), 8 + static_cast<int>(rng() % 20));
    const int frames = 1 + static_cast<int>(rng() % 4);
    const auto m = load_manifest(write_manifest_dir(dir.path(), cameras(n, size), frames));
    for (int t = 1; t <= frames; ++t) {
      const auto s = frame_stack(m, t);
      ASSERT_EQ(s.camera_count(), n);
      for (const auto& img : s.images) EXPECT_EQ(img.size(), size);
    }
  }
}

TEST(Hsv, PrimaryColours) {
  EXPECT_EQ(to_hsv(Rgb{255, 0, 0}).hue_index(), 0);
  EXPECT_EQ(to_hsv(Rgb{0, 255, 0}).hue_index(), 60);
  EXPECT_EQ(to_hsv(Rgb{0, 0, 255}).hue_index(), 120);
  EXPECT_EQ(to_hsv(Rgb{128, 128, 128}).saturation, 0);
}

// Independent oracle: OpenCV's own 8-bit conversion agrees on the hue index
// within one step (it rounds the same continuous hue).
TEST(Hsv, AgreesWithOpenCvOnHue) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const Rgb rgb{static_cast<int>(rng() % 256), static_cast<int>(rng() % 256),
                  static_cast<int>(rng() % 256)};
    cv::Mat px(1, 1, CV_8UC3, cv::Scalar(rgb.b, rgb.g, rgb.r)), hsv;
    cv::cvtColor(px, hsv, cv::COLOR_BGR2HSV);
    const auto ours = to_hsv(rgb);
    const auto ref = hsv.at<cv::Vec3b>(0, 0);
    if (ref[1] == 0) continue;
    const int d = std::abs(ours.hue_index() - ref[0]);
    EXPECT_LE(std::min(d, 180 - d), 1) << rgb.r << "," << rgb.g << "," << rgb.b;
    EXPECT_NEAR(ours.saturation, ref[1], 1);
    EXPECT_EQ(ours.value, ref[2]);
  }
}

TEST(Hsv, RoundTripOnSubsampledCube) {
  for (int r = 0; r < 256; r += 8) {
    for (int g = 0; g < 256; g += 8) {
      for (int b = 0; b < 256; b += 8) {
        const Rgb in{r, g, b};
        const Rgb out = to_rgb(to_hsv(in));
        ASSERT_LE(std::abs(out.r - r), 1) << r << "," << g << "," << b;
        ASSERT_LE(std::abs(out.g - g), 1) << r << "," << g << "," << b;
        ASSERT_LE(std::abs(out.b - b), 1) << r << "," << g << "," << b;
      }
    }
  }
}

TEST(Hsv, ImageRoundTrip) {
  const auto img = textured_image({64, 48}, 3);
  const auto back = to_bgr(to_hsv(img));
  EXPECT_LE(max_abs_diff(img, back), 1.0);
}

#include "support.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <atomic>
#include <cmath>
#include <unistd.h>

namespace mcview::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("mcview_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Image textured_image(cv::Size size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(size, CV_8UC3, cv::Scalar(60, 90, 120));
  const int blobs = size.area() / 150;
  for (int i = 0; i < blobs; ++i) {
    const cv::Point c(static_cast<int>(u(rng) * size.width), static_cast<int>(u(rng) * size.height));
    const cv::Scalar colour(u(rng) * 255, u(rng) * 255, u(rng) * 255);
    if (u(rng) < 0.5) {
      const int r = 2 + static_cast<int>(u(rng) * 6);
      cv::rectangle(img, c - cv::Point(r, r), c + cv::Point(r, r), colour, cv::FILLED);
    } else {
      cv::circle(img, c, 2 + static_cast<int>(u(rng) * 5), colour, cv::FILLED, cv::LINE_AA);
    }
  }
  cv::GaussianBlur(img, img, cv::Size(0, 0), 0.8);
  return img;
}

Image solid(cv::Size size, cv::Scalar bgr) { return Image(size, CV_8UC3, bgr); }

Homography random_homography(std::mt19937_64& rng, double size, double strength) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 0) += 0.1 * strength * u(rng);
  m(0, 1) += 0.1 * strength * u(rng);
  m(1, 0) += 0.1 * strength * u(rng);
  m(1, 1) += 0.1 * strength * u(rng);
  m(0, 2) = 0.05 * size * strength * u(rng);
  m(1, 2) = 0.05 * size * strength * u(rng);
  m(2, 0) = 2e-4 * strength * u(rng) * 400.0 / size;
  m(2, 1) = 2e-4 * strength * u(rng) * 400.0 / size;
  return Homography(m);
}

fs::path write_manifest_dir(const fs::path& dir, const std::vector<Image>& cameras, int frames,
                            double fps) {
  Manifest m;
  m.fps = fps;
  m.frame_count = frames;
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    const std::string id = "cam" + std::to_string(c + 1);
    m.camera_ids.push_back(id);
    m.frame_dirs.push_back(dir / id);
    fs::create_directories(dir / id);
    for (int t = 1; t <= frames; ++t) {
      char name[32];
      std::snprintf(name, sizeof(name), "%06d.png", t);
      cv::imwrite((dir / id / name).string(), cameras[c]);
    }
  }
  m.reference_camera = m.camera_ids.front();
  const auto path = dir / "manifest.json";
  save_manifest(m, path);
  return path;
}

StaticSource::StaticSource(std::vector<Image> cameras, int frames, double fps)
    : cameras_(std::move(cameras)), frames_(frames), fps_(fps) {
  for (std::size_t c = 0; c < cameras_.size(); ++c) ids_.push_back("cam" + std::to_string(c + 1));
}

Image StaticSource::image(int camera, int t) const {
  if (t < 1 || t > frames_) throw PreconditionError("frame out of range");
  return cameras_.at(static_cast<std::size_t>(camera)).clone();
}

double max_abs_diff(const cv::Mat& a, const cv::Mat& b) {
  double mx = 0;
  cv::Mat d;
  cv::absdiff(a, b, d);
  cv::minMaxLoc(d.reshape(1), nullptr, &mx);
  return mx;
}

bool identical(const cv::Mat& a, const cv::Mat& b) {
  if (a.size() != b.size() || a.type() != b.type()) return false;
  return max_abs_diff(a, b) == 0.0;
}

double oracle_psnr(const Image& a, const Image& b, double cap) {
  double se = 0;
  for (int y = 0; y < a.rows; ++y) {
    for (int x = 0; x < a.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double d = double(a.at<cv::Vec3b>(y, x)[c]) - double(b.at<cv::Vec3b>(y, x)[c]);
        se += d * d;
      }
    }
  }
  const double mse = se / (3.0 * a.rows * a.cols);
  return mse == 0 ? cap : std::min(cap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double oracle_itf(const std::vector<Image>& frames, double cap) {
  double s = 0;
  for (std::size_t j = 0; j + 1 < frames.size(); ++j) s += oracle_psnr(frames[j], frames[j + 1], cap);
  return s / static_cast<double>(frames.size() - 1);
}

SpeedOracle oracle_avspeed(const std::vector<std::vector<Keypoint>>& kps) {
  SpeedOracle o;
  double sum = 0;
  std::vector<bool> reached;
  for (std::size_t j = 0; j + 1 < kps.size(); ++j) {
    std::vector<bool> next(kps[j + 1].size(), false);
    for (const auto& [i, k] : match(kps[j], kps[j + 1])) {
      const auto d = kps[j + 1][k].position - kps[j][i].position;
      sum += std::sqrt(d.x * d.x + d.y * d.y);
      ++o.steps;
      if (j == 0 || !reached[i]) ++o.tracks;
      next[k] = true;
    }
    reached = std::move(next);
  }
  o.avspeed = o.steps ? sum / static_cast<double>(o.steps) : 0.0;
  return o;
}

std::vector<Image> random_video(std::mt19937_64& rng) {
  const int n = 2 + static_cast<int>(rng() % 6);
  const auto base = textured_image({160, 120}, rng());
  std::vector<Image> v;
  std::normal_distribution<double> jitter(0, 2.0);
  for (int j = 0; j < n; ++j) {
    cv::Mat m = (cv::Mat_<double>(2, 3) << 1, 0, jitter(rng), 0, 1, jitter(rng));
    Image f;
    cv::warpAffine(base, f, m, base.size(), cv::INTER_LINEAR, cv::BORDER_REFLECT);
    cv::Mat noise(f.size(), CV_16SC3);
    cv::randn(noise, 0, 3);
    f.convertTo(f, CV_16SC3);
    f += noise;
    f.convertTo(f, CV_8UC3);
    v.push_back(f);
  }
  return v;
}

}  // namespace mcview::testing

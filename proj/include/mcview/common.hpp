#pragma once

#include <opencv2/core.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mcview {

// Rasters are OpenCV matrices: 8-bit BGR images (CV_8UC3) and 8-bit masks
// (CV_8UC1, 0 or 255). Pixel centers sit on integer coordinates.
using Image = cv::Mat;
using Mask = cv::Mat;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double norm(Vec2 v);

/// Base exception for pipeline failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a caller violates an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// handled exactly once; results must be written to per-index slots so the
/// outcome does not depend on scheduling.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

/// Deterministic 64-bit mixer used to fan a root seed out to components.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace mcview

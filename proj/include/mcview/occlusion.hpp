#pragma once

#include "mcview/common.hpp"
#include "mcview/ingest.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace mcview {

/// Hue ranges of the surgical field on the 0..179 scale: [0,30] and [150,179].
bool is_field_hue(int hue);

struct FieldMask {
  Mask mask;  // 255 on field pixels
  std::size_t area = 0;
  std::optional<Vec2> centroid;  // empty when area == 0
};

/// Field pixels: hue in the field ranges and saturation > 0 (grey pixels have
/// no hue and never count).
FieldMask segment_field(const HsvImage& image);
FieldMask segment_field(const Image& bgr);

/// Field area only, without materialising the mask.
std::size_t field_area(const Image& bgr);

/// (max - min) / mean of the per-camera areas; empty when the mean is 0.
std::optional<double> degree_of_occlusion(const std::vector<double>& areas);

struct DooSample {
  int t = 0;
  std::vector<double> areas;
  std::optional<double> value;  // empty = no data
};

/// Degree of occlusion of a raw (unwarped) frame stack.
DooSample doo_at(const FrameStack& stack, int threads = 1);

struct CalibrationSearch {
  double tau = 0.5;
  int n = 5;        // consecutive samples required
  int stride = 30;  // frames between samples
};

/// Frame of the first sample starting a run of `n` consecutive samples with
/// value < tau. No-data samples break a run.
std::optional<int> find_calibration_frame(const std::vector<DooSample>& samples, double tau,
                                          int n);

/// Samples frames start + stride, start + 2*stride, ... and stops at the first
/// qualifying run. Every evaluated sample is appended to `trace` if given.
std::optional<int> find_calibration_frame(const FrameSource& source, int start,
                                          const CalibrationSearch& search = {}, int threads = 1,
                                          std::vector<DooSample>* trace = nullptr);

void write_doo_csv(const std::vector<DooSample>& samples, const std::vector<std::string>& ids,
                   const std::filesystem::path& path);

}  // namespace mcview

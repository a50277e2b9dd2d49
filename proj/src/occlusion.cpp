#include "mcview/occlusion.hpp"

#include <fstream>

namespace mcview {

bool is_field_hue(int hue) { return (hue >= 0 && hue <= 30) || (hue >= 150 && hue <= 179); }

FieldMask segment_field(const HsvImage& image) {
  FieldMask out;
  out.mask = Mask::zeros(image.size(), CV_8UC1);
  double sx = 0, sy = 0;
  for (int y = 0; y < out.mask.rows; ++y) {
    const auto* h = image.hue.ptr<std::uint8_t>(y);
    const auto* s = image.saturation.ptr<std::uint8_t>(y);
    auto* m = out.mask.ptr<std::uint8_t>(y);
    for (int x = 0; x < out.mask.cols; ++x) {
      if (s[x] > 0 && is_field_hue(h[x])) {
        m[x] = 255;
        ++out.area;
        sx += x;
        sy += y;
      }
    }
  }
  if (out.area > 0) {
    out.centroid = Vec2{sx / static_cast<double>(out.area), sy / static_cast<double>(out.area)};
  }
  return out;
}

FieldMask segment_field(const Image& bgr) { return segment_field(to_hsv(bgr)); }

std::size_t field_area(const Image& bgr) {
  CV_Assert(bgr.type() == CV_8UC3);
  std::size_t area = 0;
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* p = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      const auto hsv = to_hsv(Rgb{p[x][2], p[x][1], p[x][0]});
      if (hsv.saturation > 0 && is_field_hue(hsv.hue_index())) ++area;
    }
  }
  return area;
}

std::optional<double> degree_of_occlusion(const std::vector<double>& areas) {
  if (areas.empty()) return std::nullopt;
  double lo = areas.front(), hi = areas.front(), sum = 0;
  for (double a : areas) {
    lo = std::min(lo, a);
    hi = std::max(hi, a);
    sum += a;
  }
  const double mean = sum / static_cast<double>(areas.size());
  if (!(mean > 0)) return std::nullopt;
  return (hi - lo) / mean;
}

DooSample doo_at(const FrameStack& stack, int threads) {
  if (stack.camera_count() < 2) throw PreconditionError("degree of occlusion needs two cameras");
  DooSample out;
  out.t = stack.t;
  out.areas.resize(stack.images.size());
  parallel_for(stack.images.size(), threads, [&](std::size_t c) {
    out.areas[c] = static_cast<double>(field_area(stack.images[c]));
  });
  out.value = degree_of_occlusion(out.areas);
  return out;
}

std::optional<int> find_calibration_frame(const std::vector<DooSample>& samples, double tau,
                                          int n) {
  if (n < 1) throw PreconditionError("run length must be positive");
  int run = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& v = samples[i].value;
    run = (v && *v < tau) ? run + 1 : 0;
    if (run == n) return samples[i + 1 - static_cast<std::size_t>(n)].t;
  }
  return std::nullopt;
}

std::optional<int> find_calibration_frame(const FrameSource& source, int start,
                                          const CalibrationSearch& search, int threads,
                                          std::vector<DooSample>* trace) {
  if (search.n < 1 || search.stride < 1) throw PreconditionError("invalid calibration search");
  std::vector<DooSample> samples;
  for (int t = start + search.stride; t <= source.frame_count(); t += search.stride) {
    samples.push_back(doo_at(source.stack(t, threads), threads));
    if (trace) trace->push_back(samples.back());
    // only the tail can complete a run
    const auto tail_begin = samples.size() > static_cast<std::size_t>(search.n)
                                ? samples.end() - search.n
                                : samples.begin();
    const std::vector<DooSample> tail(tail_begin, samples.end());
    if (auto hit = find_calibration_frame(tail, search.tau, search.n)) return hit;
  }
  return std::nullopt;
}

void write_doo_csv(const std::vector<DooSample>& samples, const std::vector<std::string>& ids,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "t";
  for (const auto& id : ids) out << ",area_" << id;
  out << ",doo\n";
  for (const auto& s : samples) {
    out << s.t;
    for (double a : s.areas) out << ',' << a;
    out << ',';
    if (s.value) out << *s.value;
    out << '\n';
  }
}

}  // namespace mcview

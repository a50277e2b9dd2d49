#include "mcview/features.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <tuple>

namespace mcview {

namespace {

constexpr int kCells = 4;
constexpr int kOrientationBins = 8;
constexpr double kCellSize = 4.0;                       // px per descriptor cell
constexpr double kPatchHalf = kCells * kCellSize / 2.0;  // 8 px
constexpr int kBorder = 13;                              // > kPatchHalf * sqrt(2) + 1
constexpr double kOrientationRadius = 8.0;

float sample(const cv::Mat& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.cols - 1);
  const int y1 = std::min(y0 + 1, img.rows - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const float* r0 = img.ptr<float>(std::clamp(y0, 0, img.rows - 1));
  const float* r1 = img.ptr<float>(y1);
  const int cx0 = std::clamp(x0, 0, img.cols - 1);
  return static_cast<float>((1 - fy) * ((1 - fx) * r0[cx0] + fx * r0[x1]) +
                            fy * ((1 - fx) * r1[cx0] + fx * r1[x1]));
}

float dominant_orientation(const cv::Mat& gx, const cv::Mat& gy, Vec2 p) {
  constexpr int kBins = 36;
  constexpr int r = static_cast<int>(kOrientationRadius);
  constexpr int kSide = 2 * r + 1;
  static const auto weights = [] {
    std::array<float, kSide * kSide> w{};
    const double sigma2 = 2.0 * (kOrientationRadius / 2.0) * (kOrientationRadius / 2.0);
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const bool inside = dx * dx + dy * dy <= r * r;
        w[(dy + r) * kSide + dx + r] =
            inside ? static_cast<float>(std::exp(-(dx * dx + dy * dy) / sigma2)) : 0.0F;
      }
    }
    return w;
  }();

  std::array<double, kBins> hist{};
  const int cx = static_cast<int>(std::lround(p.x));
  const int cy = static_cast<int>(std::lround(p.y));
  for (int dy = -r; dy <= r; ++dy) {
    const float* rx = gx.ptr<float>(cy + dy);
    const float* ry = gy.ptr<float>(cy + dy);
    for (int dx = -r; dx <= r; ++dx) {
      const float w = weights[(dy + r) * kSide + dx + r];
      if (w == 0.0F) continue;
      const float ux = rx[cx + dx];
      const float uy = ry[cx + dx];
      const float mag = std::sqrt(ux * ux + uy * uy);
      if (mag == 0.0F) continue;
      const int bin = static_cast<int>(cv::fastAtan2(uy, ux) * (kBins / 360.0F)) % kBins;
      hist[static_cast<std::size_t>(bin)] += w * mag;
    }
  }
  std::array<double, kBins> smooth{};
  for (int i = 0; i < kBins; ++i) {
    smooth[static_cast<std::size_t>(i)] =
        0.25 * hist[static_cast<std::size_t>((i + kBins - 1) % kBins)] +
        0.5 * hist[static_cast<std::size_t>(i)] +
        0.25 * hist[static_cast<std::size_t>((i + 1) % kBins)];
  }
  const auto best = static_cast<int>(std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
  const double l = smooth[static_cast<std::size_t>((best + kBins - 1) % kBins)];
  const double c = smooth[static_cast<std::size_t>(best)];
  const double rr = smooth[static_cast<std::size_t>((best + 1) % kBins)];
  const double denom = l - 2 * c + rr;
  const double offset = denom != 0.0 ? 0.5 * (l - rr) / denom : 0.0;
  return static_cast<float>((best + 0.5 + offset) * 2 * std::numbers::pi / kBins);
}

Descriptor describe(const cv::Mat& gx, const cv::Mat& gy, Vec2 p, float angle) {
  std::array<float, kCells * kCells * kOrientationBins> hist{};
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  constexpr int samples = kCells * static_cast<int>(kCellSize);
  static const auto weights = [] {
    std::array<float, samples * samples> w{};
    const double sigma2 = 2.0 * kPatchHalf * kPatchHalf;
    for (int j = 0; j < samples; ++j) {
      for (int i = 0; i < samples; ++i) {
        const double u = i + 0.5 - kPatchHalf, v = j + 0.5 - kPatchHalf;
        w[j * samples + i] = static_cast<float>(std::exp(-(u * u + v * v) / sigma2));
      }
    }
    return w;
  }();
  const double angle_deg = angle * 180.0 / std::numbers::pi;
  for (int j = 0; j < samples; ++j) {
    for (int i = 0; i < samples; ++i) {
      // patch-frame offset of the sample centre
      const double u = i + 0.5 - kPatchHalf;
      const double v = j + 0.5 - kPatchHalf;
      const double x = p.x + ca * u - sa * v;
      const double y = p.y + sa * u + ca * v;
      const float ux = sample(gx, x, y);
      const float uy = sample(gy, x, y);
      const double mag = std::sqrt(ux * ux + uy * uy) * weights[j * samples + i];
      if (mag == 0.0) continue;
      double ang = cv::fastAtan2(uy, ux) - angle_deg;
      if (ang < 0) ang += 360.0;
      if (ang >= 360.0) ang -= 360.0;
      ang *= std::numbers::pi / 180.0;

      // trilinear distribution over (cell x, cell y, orientation)
      const double cxf = (u + kPatchHalf) / kCellSize - 0.5;
      const double cyf = (v + kPatchHalf) / kCellSize - 0.5;
      const double of = ang / (2 * std::numbers::pi) * kOrientationBins;
      const int cx0 = static_cast<int>(std::floor(cxf));
      const int cy0 = static_cast<int>(std::floor(cyf));
      const int o0 = static_cast<int>(std::floor(of));
      const double fx = cxf - cx0;
      const double fy = cyf - cy0;
      const double fo = of - o0;
      for (int dy = 0; dy < 2; ++dy) {
        const int cy = cy0 + dy;
        if (cy < 0 || cy >= kCells) continue;
        const double wy = dy ? fy : 1 - fy;
        for (int dx = 0; dx < 2; ++dx) {
          const int cx = cx0 + dx;
          if (cx < 0 || cx >= kCells) continue;
          const double wx = dx ? fx : 1 - fx;
          for (int dob = 0; dob < 2; ++dob) {
            const int ob = (o0 + dob) % kOrientationBins;
            const double wo = dob ? fo : 1 - fo;
            hist[static_cast<std::size_t>((cy * kCells + cx) * kOrientationBins + ob)] +=
                static_cast<float>(mag * wx * wy * wo);
          }
        }
      }
    }
  }

  auto normalise = [&hist] {
    double s = 0;
    for (float h : hist) s += static_cast<double>(h) * h;
    const double n = std::sqrt(s);
    if (n > 0) {
      for (float& h : hist) h = static_cast<float>(h / n);
    }
  };
  normalise();
  for (float& h : hist) h = std::min(h, 0.2F);
  normalise();

  Descriptor d{};
  for (std::size_t k = 0; k < hist.size(); ++k) {
    d[k] = static_cast<std::uint8_t>(std::min(255.0F, std::round(hist[k] * 512.0F)));
  }
  return d;
}

}  // namespace

std::vector<Keypoint> detect(const Image& image, const DetectorOptions& options) {
  std::vector<Keypoint> out;
  if (image.empty() || options.max_points <= 0) return out;
  if (image.cols <= 2 * kBorder || image.rows <= 2 * kBorder) return out;

  cv::Mat gray;
  if (image.channels() == 3) {
    cv::cvtColor(image, gray, cv::COLOR_BGR2GRAY);
  } else {
    gray = image;
  }
  gray.convertTo(gray, CV_32F, 1.0 / 255.0);

  cv::Mat smooth, gx, gy;
  cv::GaussianBlur(gray, smooth, cv::Size(0, 0), 1.0, 1.0, cv::BORDER_REFLECT);
  cv::Sobel(smooth, gx, CV_32F, 1, 0, 3, 1.0 / 8.0, 0, cv::BORDER_REFLECT);
  cv::Sobel(smooth, gy, CV_32F, 0, 1, 3, 1.0 / 8.0, 0, cv::BORDER_REFLECT);

  cv::Mat ixx = gx.mul(gx), iyy = gy.mul(gy), ixy = gx.mul(gy);
  cv::GaussianBlur(ixx, ixx, cv::Size(0, 0), 1.5, 1.5, cv::BORDER_REFLECT);
  cv::GaussianBlur(iyy, iyy, cv::Size(0, 0), 1.5, 1.5, cv::BORDER_REFLECT);
  cv::GaussianBlur(ixy, ixy, cv::Size(0, 0), 1.5, 1.5, cv::BORDER_REFLECT);
  cv::Mat trace = ixx + iyy;
  cv::Mat response = ixx.mul(iyy) - ixy.mul(ixy) - options.harris_k * trace.mul(trace);

  double max_response = 0.0;
  cv::minMaxLoc(response, nullptr, &max_response);
  if (max_response <= 1e-12) return out;
  const float threshold = static_cast<float>(options.relative_threshold * max_response);

  cv::Mat dilated;
  const int k = 2 * options.nms_radius + 1;
  cv::dilate(response, dilated, cv::getStructuringElement(cv::MORPH_RECT, cv::Size(k, k)));

  struct Candidate {
    float response;
    int x;
    int y;
  };
  std::vector<Candidate> candidates;
  for (int y = kBorder; y < image.rows - kBorder; ++y) {
    const float* r = response.ptr<float>(y);
    const float* d = dilated.ptr<float>(y);
    for (int x = kBorder; x < image.cols - kBorder; ++x) {
      if (r[x] > threshold && r[x] >= d[x]) candidates.push_back({r[x], x, y});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.response > b.response; });

  // Plateaus of equal maxima would yield several adjacent candidates; keep
  // the first one within the suppression radius.
  cv::Mat taken = cv::Mat::zeros(image.size(), CV_8U);
  for (const auto& cand : candidates) {
    if (static_cast<int>(out.size()) >= options.max_points) break;
    bool blocked = false;
    for (int dy = -options.nms_radius; dy <= options.nms_radius && !blocked; ++dy) {
      for (int dx = -options.nms_radius; dx <= options.nms_radius; ++dx) {
        if (taken.at<std::uint8_t>(cand.y + dy, cand.x + dx)) {
          blocked = true;
          break;
        }
      }
    }
    if (blocked) continue;
    taken.at<std::uint8_t>(cand.y, cand.x) = 1;

    auto peak_offset = [](float l, float c, float r) {
      const float denom = l - 2 * c + r;
      if (denom >= 0.0F) return 0.0;
      return std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
    };
    const float* row = response.ptr<float>(cand.y);
    const double ox = peak_offset(row[cand.x - 1], row[cand.x], row[cand.x + 1]);
    const double oy = peak_offset(response.at<float>(cand.y - 1, cand.x), row[cand.x],
                                  response.at<float>(cand.y + 1, cand.x));

    Keypoint kp;
    kp.position = {cand.x + ox, cand.y + oy};
    kp.response = cand.response;
    out.push_back(kp);
  }

  for (auto& kp : out) {
    kp.angle = dominant_orientation(gx, gy, kp.position);
    kp.descriptor = describe(gx, gy, kp.position, kp.angle);
  }
  return out;
}

std::vector<Keypoint> detect(const Image& image, int max_points) {
  DetectorOptions options;
  options.max_points = max_points;
  return detect(image, options);
}

int descriptor_distance2(const Descriptor& a, const Descriptor& b) {
  int s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
    s += d * d;
  }
  return s;
}

std::vector<IndexPair> match(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                             const MatchOptions& options) {
  std::vector<IndexPair> out;
  if (a.empty() || b.empty()) return out;

  const auto na = a.size();
  const auto nb = b.size();
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> best_a(na, -1), d1_a(na, kInf), d2_a(na, kInf);
  std::vector<int> best_b(nb, -1), d1_b(nb, kInf), d2_b(nb, kInf);

  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const int d = descriptor_distance2(a[i].descriptor, b[j].descriptor);
      if (d < d1_a[i]) {
        d2_a[i] = d1_a[i];
        d1_a[i] = d;
        best_a[i] = static_cast<int>(j);
      } else if (d < d2_a[i]) {
        d2_a[i] = d;
      }
      if (d < d1_b[j]) {
        d2_b[j] = d1_b[j];
        d1_b[j] = d;
        best_b[j] = static_cast<int>(i);
      } else if (d < d2_b[j]) {
        d2_b[j] = d;
      }
    }
  }

  const double r2 = options.ratio * options.ratio;
  auto passes_ratio = [r2](int d1, int d2) {
    return d2 == kInf || static_cast<double>(d1) < r2 * static_cast<double>(d2);
  };
  for (std::size_t i = 0; i < na; ++i) {
    const int j = best_a[i];
    if (!passes_ratio(d1_a[i], d2_a[i])) continue;
    if (!passes_ratio(d1_b[static_cast<std::size_t>(j)], d2_b[static_cast<std::size_t>(j)])) continue;
    if (options.mutual && best_b[static_cast<std::size_t>(j)] != static_cast<int>(i)) continue;
    out.emplace_back(static_cast<int>(i), j);
  }
  return out;
}

std::size_t MatchSet::per_pair_count(int c1, int c2) const {
  const auto key = c1 < c2 ? CameraPair{c1, c2} : CameraPair{c2, c1};
  const auto it = pairs.find(key);
  return it == pairs.end() ? 0 : it->second.size();
}

std::size_t MatchSet::total() const {
  std::size_t n = 0;
  for (const auto& [key, list] : pairs) n += list.size();
  return n;
}

std::vector<Correspondence> MatchSet::oriented(int from, int to) const {
  const bool flip = from > to;
  const auto key = flip ? CameraPair{to, from} : CameraPair{from, to};
  std::vector<Correspondence> out;
  const auto it = pairs.find(key);
  if (it == pairs.end()) return out;
  out.reserve(it->second.size());
  for (const auto& c : it->second) out.push_back(flip ? Correspondence{c.b, c.a} : c);
  return out;
}

namespace {

std::vector<CameraPair> all_pairs(int n) {
  std::vector<CameraPair> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

std::vector<std::vector<Correspondence>> match_all_pairs(
    const std::vector<std::vector<Keypoint>>& keypoints, const std::vector<CameraPair>& pairs,
    const MatchOptions& matcher, int threads) {
  std::vector<std::vector<Correspondence>> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    const auto& ka = keypoints[static_cast<std::size_t>(pairs[p].first)];
    const auto& kb = keypoints[static_cast<std::size_t>(pairs[p].second)];
    for (const auto& [i, j] : match(ka, kb, matcher)) {
      out[p].push_back({ka[static_cast<std::size_t>(i)].position,
                        kb[static_cast<std::size_t>(j)].position});
    }
  });
  return out;
}

std::vector<std::vector<Keypoint>> detect_all(const FrameStack& stack,
                                              const DetectorOptions& detector, int threads) {
  std::vector<std::vector<Keypoint>> keypoints(stack.images.size());
  parallel_for(stack.images.size(), threads,
               [&](std::size_t c) { keypoints[c] = detect(stack.images[c], detector); });
  return keypoints;
}

std::string camera_name(const std::vector<std::string>& ids, int c) {
  if (c >= 0 && c < static_cast<int>(ids.size())) return ids[static_cast<std::size_t>(c)];
  return "camera " + std::to_string(c);
}

}  // namespace

MatchSet match_stack(const FrameStack& stack, const DetectorOptions& detector,
                     const MatchOptions& matcher, int threads) {
  MatchSet set;
  set.window = {stack.t, stack.t};
  set.frames_used = 1;
  const auto pairs = all_pairs(stack.camera_count());
  const auto keypoints = detect_all(stack, detector, threads);
  auto matched = match_all_pairs(keypoints, pairs, matcher, threads);
  for (std::size_t p = 0; p < pairs.size(); ++p) set.pairs[pairs[p]] = std::move(matched[p]);
  return set;
}

void require_calibration_chain(const MatchSet& matches, int camera_count, int reference,
                               int min_matches, const std::vector<std::string>& ids) {
  const auto enough = [&](int a, int b) {
    return static_cast<int>(matches.per_pair_count(a, b)) >= min_matches;
  };
  for (int c = 0; c < camera_count; ++c) {
    if (c == reference || enough(c, reference)) continue;
    bool chained = false;
    for (int k = 0; k < camera_count && !chained; ++k) {
      if (k != c && k != reference && enough(c, k) && enough(k, reference)) chained = true;
    }
    if (!chained) {
      throw InsufficientCorrespondences(
          c, reference,
          "insufficient correspondences between " + camera_name(ids, c) + " and " +
              camera_name(ids, reference) + " (" +
              std::to_string(matches.per_pair_count(c, reference)) + " < " +
              std::to_string(min_matches) + ")");
    }
  }
}

MatchSet accumulate_matches(const FrameSource& source, FrameRange window, int stride,
                            const AccumulateOptions& options, int threads) {
  if (stride < 1) throw PreconditionError("accumulation stride must be >= 1");
  window.first = std::max(window.first, 1);
  window.last = std::min(window.last, source.frame_count());
  if (window.last < window.first) throw PreconditionError("empty accumulation window");

  MatchSet set;
  set.window = window;
  const auto pairs = all_pairs(source.camera_count());
  std::map<CameraPair, std::set<std::tuple<long, long, long, long>>> occupied;

  const auto bin = [&](double v) { return static_cast<long>(std::floor(v / options.dedup_bin)); };
  for (int t = window.first; t <= window.last; t += stride) {
    const auto stack = source.stack(t, threads);
    const auto keypoints = detect_all(stack, options.detector, threads);
    const auto matched = match_all_pairs(keypoints, pairs, options.matcher, threads);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      auto& cells = occupied[pairs[p]];
      auto& list = set.pairs[pairs[p]];
      for (const auto& c : matched[p]) {
        if (cells.emplace(bin(c.a.x), bin(c.a.y), bin(c.b.x), bin(c.b.y)).second) {
          list.push_back(c);
        }
      }
    }
    ++set.frames_used;
  }

  require_calibration_chain(set, source.camera_count(), source.reference_index(),
                            options.min_matches, source.camera_ids());
  return set;
}

}  // namespace mcview

#include "mcview/motion.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace mcview {

using nlohmann::json;

std::optional<double> degree_of_misalignment(const MatchSet& matches,
                                             const HomographyAtlas& atlas) {
  double sum = 0;
  std::size_t count = 0;
  for (const auto& [pair, list] : matches.pairs) {
    if (list.empty()) continue;
    const Homography h = atlas.between(pair.first, pair.second);
    for (const auto& m : list) {
      sum += norm(h.apply(m.a) - m.b);
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

MatchSet verified_matches(const MatchSet& fresh, const DomOptions& options, std::uint64_t salt) {
  MatchSet out;
  out.window = fresh.window;
  out.frames_used = fresh.frames_used;
  for (const auto& [pair, list] : fresh.pairs) {
    auto& kept = out.pairs[pair];
    if (static_cast<int>(list.size()) < std::max(4, options.min_pair_matches)) continue;
    if (!options.verify) {
      kept = list;
      continue;
    }
    auto ransac = options.ransac;
    ransac.seed = mix_seed(mix_seed(options.ransac.seed, salt),
                           static_cast<std::uint64_t>(pair.first * 64 + pair.second));
    try {
      const auto est = estimate_homography(list, ransac);
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (est.inliers[i]) kept.push_back(list[i]);
      }
    } catch (const DegenerateConfiguration&) {
      // nothing trustworthy in this pair
    }
  }
  return out;
}

std::optional<double> dom_at(const FrameStack& stack, const HomographyAtlas& atlas,
                             const DomOptions& options, int threads) {
  if (stack.camera_count() != atlas.camera_count()) {
    throw PreconditionError("atlas and frame stack disagree on the camera count");
  }
  const auto fresh = match_stack(stack, options.detector, options.matcher, threads);
  return degree_of_misalignment(
      verified_matches(fresh, options, static_cast<std::uint64_t>(stack.t)), atlas);
}

DomSeries dom_series(const FrameSource& source, FrameRange range, int stride,
                     const HomographyAtlas& atlas, const DomOptions& options, int threads) {
  if (stride < 1) throw PreconditionError("DOM stride must be positive");
  DomSeries out;
  out.stride = stride;
  for (int t = range.first; t <= range.last; t += stride) out.samples.push_back({t, {}});
  parallel_for(out.samples.size(), threads, [&](std::size_t i) {
    out.samples[i].value = dom_at(source.stack(out.samples[i].t), atlas, options, 1);
  });
  return out;
}

void filter_outliers(DomSeries& series, const IsolationForestOptions& options,
                     int median_window) {
  series.inlier.assign(series.size(), false);
  std::vector<std::size_t> valid;
  std::vector<double> values;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.samples[i].value) {
      valid.push_back(i);
      values.push_back(*series.samples[i].value);
    }
  }
  if (values.empty()) return;

  const int half = std::max(0, median_window / 2);
  std::vector<double> residual(values.size());
  std::vector<double> window;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto lo = k >= static_cast<std::size_t>(half) ? k - half : 0;
    const auto hi = std::min(values.size() - 1, k + half);
    window.assign(values.begin() + static_cast<std::ptrdiff_t>(lo),
                  values.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
    std::nth_element(window.begin(), mid, window.end());
    residual[k] = values[k] - *mid;
  }

  const auto model = fit_isolation_forest(residual, options);
  const auto flags = outlier_flags(model, residual);
  for (std::size_t k = 0; k < valid.size(); ++k) series.inlier[valid[k]] = !flags[k];
}

DomSeries smooth(const DomSeries& series, int window) {
  if (window < 1 || window % 2 == 0) throw PreconditionError("smoothing window must be odd");
  DomSeries out = series;
  if (out.inlier.size() != out.size()) {
    out.inlier.resize(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) out.inlier[i] = out.samples[i].value.has_value();
  }
  out.smoothed.assign(out.size(), std::nullopt);
  const auto n = static_cast<std::ptrdiff_t>(out.size());
  const std::ptrdiff_t half = window / 2;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!out.inlier[i]) continue;
    double sum = 0;
    int count = 0;
    for (auto j = std::max<std::ptrdiff_t>(0, i - half); j <= std::min(n - 1, i + half); ++j) {
      if (out.inlier[j]) {
        sum += *out.samples[j].value;
        ++count;
      }
    }
    out.smoothed[i] = sum / count;
  }
  return out;
}

double threshold(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double hi = values.front(), sum = 0;
  for (double v : values) {
    hi = std::max(hi, v);
    sum += v;
  }
  return std::min(hi + 1.0, 2.0 * sum / static_cast<double>(values.size()));
}

std::vector<MovementEvent> detect_movement_events(const DomSeries& series, double fps,
                                                  const MovementOptions& options) {
  if (!(options.m_seconds > 0) || !(fps > 0) || options.exceed_count < 1) {
    throw PreconditionError("invalid movement detection options");
  }
  std::vector<MovementEvent> events;
  if (series.samples.empty()) return events;
  const DomSeries s = series.smoothed.size() == series.size() ? series : smooth(series, 1);

  const int interval = std::max(1, static_cast<int>(std::lround(options.m_seconds * fps)));
  const int span = static_cast<int>(std::lround(options.window_seconds * fps));
  const int t0 = s.samples.front().t;
  const int t_last = s.samples.back().t;

  bool previous_qualified = false;
  int previous_median = 0;
  for (int a = t0; a <= t_last; a += interval) {
    const int end = a + interval;  // exclusive
    const int from = std::max(t0, end - span);
    std::vector<double> window;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const int t = s.samples[i].t;
      if (t >= from && t < end && s.smoothed[i]) window.push_back(*s.smoothed[i]);
    }
    const double tau = threshold(window);

    std::vector<int> exceeding;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const int t = s.samples[i].t;
      if (t >= a && t < end && s.smoothed[i] && *s.smoothed[i] > tau) exceeding.push_back(t);
    }
    if (static_cast<int>(exceeding.size()) < options.exceed_count) {
      previous_qualified = false;
      continue;
    }
    const int median = exceeding[(exceeding.size() - 1) / 2];
    const bool same_move =
        !events.empty() && (previous_qualified || median - previous_median <= interval);
    if (!same_move) {
      events.push_back({median, {a, end - 1}, static_cast<int>(exceeding.size()), tau});
    }
    previous_qualified = true;
    previous_median = median;
  }
  return events;
}

std::vector<int> detect_movements(const DomSeries& series, double fps, double m_seconds,
                                  int exceed_count) {
  MovementOptions options;
  options.m_seconds = m_seconds;
  options.exceed_count = exceed_count;
  std::vector<int> out;
  for (const auto& e : detect_movement_events(series, fps, options)) out.push_back(e.t_mov);
  return out;
}

// --- timeline --------------------------------------------------------------------

const Segment& Timeline::segment_at(int t) const {
  for (const auto& s : segments) {
    if (t >= s.first && t <= s.last) return s;
  }
  throw PreconditionError("frame " + std::to_string(t) + " is outside the timeline");
}

Timeline build_timeline(int frame_count, double fps, const std::vector<int>& movements,
                        const std::vector<std::optional<int>>& calibration_points) {
  if (frame_count < 1) throw PreconditionError("timeline needs at least one frame");
  if (!std::is_sorted(movements.begin(), movements.end())) {
    throw PreconditionError("movement events must be sorted");
  }
  Timeline tl;
  tl.frame_count = frame_count;
  tl.fps = fps;
  tl.movement_events = movements;

  const int design_gap = static_cast<int>(std::lround(600.0 * fps));
  int start = 1;
  int atlas = 0;
  for (std::size_t k = 0; k < movements.size(); ++k) {
    const int t_mov = movements[k];
    if (t_mov < start || t_mov > frame_count) {
      throw PreconditionError("movement event " + std::to_string(t_mov) + " out of order");
    }
    if (k > 0 && t_mov - movements[k - 1] < design_gap) tl.below_design_rate.push_back(t_mov);
    tl.segments.push_back({start, t_mov, atlas, false});

    const auto t_hom = k < calibration_points.size() ? calibration_points[k] : std::nullopt;
    const int next_move = k + 1 < movements.size() ? movements[k + 1] : frame_count + 1;
    if (!t_hom || *t_hom > frame_count || *t_hom <= t_mov) {
      tl.warnings.push_back("no calibration frame after movement at frame " +
                            std::to_string(t_mov) + "; keeping the previous atlas");
      if (t_mov < frame_count) tl.segments.push_back({t_mov + 1, frame_count, atlas, true});
      start = frame_count + 1;
      break;
    }
    if (*t_hom > next_move) {
      throw PreconditionError("calibration point after the following movement");
    }
    tl.calibration_points.push_back(*t_hom);
    if (*t_hom > t_mov + 1) tl.segments.push_back({t_mov + 1, *t_hom - 1, atlas, true});
    start = *t_hom;
    ++atlas;
  }
  if (start <= frame_count) tl.segments.push_back({start, frame_count, atlas, false});
  return tl;
}

Timeline build_timeline(const Manifest& manifest, const std::vector<int>& movements,
                        const std::vector<std::optional<int>>& calibration_points) {
  return build_timeline(manifest.frame_count, manifest.fps, movements, calibration_points);
}

void write_timeline(const Timeline& tl, const std::filesystem::path& path) {
  json doc;
  doc["fps"] = tl.fps;
  doc["frame_count"] = tl.frame_count;
  doc["movement_events"] = tl.movement_events;
  doc["calibration_points"] = tl.calibration_points;
  doc["below_design_rate"] = tl.below_design_rate;
  doc["warnings"] = tl.warnings;
  json events = json::array();
  for (int t : tl.movement_events) {
    events.push_back({{"frame", t}, {"time_s", (t - 1) / tl.fps}, {"type", "move"}});
  }
  for (int t : tl.calibration_points) {
    events.push_back({{"frame", t}, {"time_s", (t - 1) / tl.fps}, {"type", "calibration"}});
  }
  std::stable_sort(events.begin(), events.end(), [](const json& a, const json& b) {
    return a["frame"].get<int>() < b["frame"].get<int>();
  });
  doc["events"] = events;
  doc["segments"] = json::array();
  for (const auto& s : tl.segments) {
    doc["segments"].push_back(
        {{"first", s.first}, {"last", s.last}, {"atlas", s.atlas_id}, {"stale", s.stale}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

Timeline read_timeline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  const auto doc = json::parse(in);
  Timeline tl;
  tl.fps = doc.at("fps").get<double>();
  tl.frame_count = doc.at("frame_count").get<int>();
  tl.movement_events = doc.at("movement_events").get<std::vector<int>>();
  tl.calibration_points = doc.at("calibration_points").get<std::vector<int>>();
  tl.below_design_rate = doc.at("below_design_rate").get<std::vector<int>>();
  tl.warnings = doc.at("warnings").get<std::vector<std::string>>();
  for (const auto& s : doc.at("segments")) {
    tl.segments.push_back({s.at("first").get<int>(), s.at("last").get<int>(),
                           s.at("atlas").get<int>(), s.at("stale").get<bool>()});
  }
  return tl;
}

void write_dom_csv(const DomSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "t,dom,inlier,smoothed\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << series.samples[i].t << ',';
    if (series.samples[i].value) out << *series.samples[i].value;
    out << ',' << (i < series.inlier.size() && series.inlier[i] ? 1 : 0) << ',';
    if (i < series.smoothed.size() && series.smoothed[i]) out << *series.smoothed[i];
    out << '\n';
  }
}

}  // namespace mcview

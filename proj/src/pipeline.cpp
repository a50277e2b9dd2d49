#include "mcview/pipeline.hpp"

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mcview {

namespace fs = std::filesystem;
using nlohmann::json;

// --- configuration -----------------------------------------------------------------

void PipelineConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0)) throw PreconditionError(std::string("config: ") + name + " must be positive");
  };
  positive(m_seconds, "m_seconds");
  positive(exceed_count, "exceed_count");
  positive(dom_stride_s, "dom_stride_s");
  positive(ma_window, "ma_window");
  if (ma_window % 2 == 0) throw PreconditionError("config: ma_window must be odd");
  positive(median_window, "median_window");
  positive(threshold_window_s, "threshold_window_s");
  positive(forest.tree_count, "forest.trees");
  positive(forest.subsample, "forest.subsample");
  if (forest.contamination < 0 || forest.contamination >= 1) {
    throw PreconditionError("config: forest.contamination must lie in [0, 1)");
  }
  positive(tau_doo, "tau_doo");
  positive(n_consecutive, "n");
  positive(doo_stride, "doo_stride");
  positive(calibration_window, "calibration_window");
  positive(calibration_stride, "calibration_stride");
  positive(min_matches, "min_matches");
  positive(max_points, "max_points");
  positive(match_ratio, "match_ratio");
  positive(ransac.threshold, "ransac.threshold");
  positive(ransac.max_iterations, "ransac.iterations");
  positive(ransac.confidence, "ransac.confidence");
  positive(cadence, "cadence");
  positive(dwell_min, "dwell_min");
  positive(center_alpha, "center_alpha");
  if (center_alpha > 1) throw PreconditionError("config: center_alpha must be <= 1");
  positive(fill.kernel, "fill.kernel");
  if (fill.kernel % 2 == 0) throw PreconditionError("config: fill.kernel must be odd");
  positive(fill.sigma, "fill.sigma");
  positive(psnr_cap, "psnr_cap");
}

namespace {

json config_json(const PipelineConfig& c) {
  return {{"alignment", c.alignment},
          {"m_seconds", c.m_seconds},
          {"exceed_count", c.exceed_count},
          {"dom_stride_s", c.dom_stride_s},
          {"ma_window", c.ma_window},
          {"median_window", c.median_window},
          {"threshold_window_s", c.threshold_window_s},
          {"forest",
           {{"trees", c.forest.tree_count},
            {"subsample", c.forest.subsample},
            {"contamination", c.forest.contamination}}},
          {"tau_doo", c.tau_doo},
          {"n", c.n_consecutive},
          {"doo_stride", c.doo_stride},
          {"calibration_window", c.calibration_window},
          {"calibration_stride", c.calibration_stride},
          {"min_matches", c.min_matches},
          {"max_points", c.max_points},
          {"match_ratio", c.match_ratio},
          {"ransac",
           {{"threshold", c.ransac.threshold},
            {"iterations", c.ransac.max_iterations},
            {"confidence", c.ransac.confidence}}},
          {"cadence", c.cadence},
          {"dwell_min", c.dwell_min},
          {"centering", c.centering},
          {"filling", c.filling},
          {"center_alpha", c.center_alpha},
          {"fill", {{"kernel", c.fill.kernel}, {"sigma", c.fill.sigma}}},
          {"psnr_cap", c.psnr_cap},
          {"seed", c.seed}};
}

template <typename T>
void take(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace

std::string config_to_json(const PipelineConfig& config) { return config_json(config).dump(2); }

PipelineConfig config_from_json(const std::string& text) {
  const auto j = json::parse(text);
  if (!j.is_object()) throw PreconditionError("config must be a JSON object");
  const auto known = config_json(PipelineConfig{});
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw PreconditionError("config: unknown key '" + key + "'");
  }
  PipelineConfig c;
  take(j, "alignment", c.alignment);
  take(j, "m_seconds", c.m_seconds);
  take(j, "exceed_count", c.exceed_count);
  take(j, "dom_stride_s", c.dom_stride_s);
  take(j, "ma_window", c.ma_window);
  take(j, "median_window", c.median_window);
  take(j, "threshold_window_s", c.threshold_window_s);
  if (j.contains("forest")) {
    const auto& f = j["forest"];
    take(f, "trees", c.forest.tree_count);
    take(f, "subsample", c.forest.subsample);
    take(f, "contamination", c.forest.contamination);
  }
  take(j, "tau_doo", c.tau_doo);
  take(j, "n", c.n_consecutive);
  take(j, "doo_stride", c.doo_stride);
  take(j, "calibration_window", c.calibration_window);
  take(j, "calibration_stride", c.calibration_stride);
  take(j, "min_matches", c.min_matches);
  take(j, "max_points", c.max_points);
  take(j, "match_ratio", c.match_ratio);
  if (j.contains("ransac")) {
    const auto& r = j["ransac"];
    take(r, "threshold", c.ransac.threshold);
    take(r, "iterations", c.ransac.max_iterations);
    take(r, "confidence", c.ransac.confidence);
  }
  take(j, "cadence", c.cadence);
  take(j, "dwell_min", c.dwell_min);
  take(j, "centering", c.centering);
  take(j, "filling", c.filling);
  take(j, "center_alpha", c.center_alpha);
  if (j.contains("fill")) {
    take(j["fill"], "kernel", c.fill.kernel);
    take(j["fill"], "sigma", c.fill.sigma);
  }
  take(j, "psnr_cap", c.psnr_cap);
  take(j, "seed", c.seed);
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

// --- alignment ------------------------------------------------------------------------

namespace {

DetectorOptions detector_of(const PipelineConfig& c) {
  DetectorOptions d;
  d.max_points = c.max_points;
  return d;
}

MatchOptions matcher_of(const PipelineConfig& c) {
  MatchOptions m;
  m.ratio = c.match_ratio;
  return m;
}

CalibrationSearch search_of(const PipelineConfig& c) {
  return {c.tau_doo, c.n_consecutive, c.doo_stride};
}

int dom_stride_frames(const PipelineConfig& c, double fps) {
  return std::max(1, static_cast<int>(std::lround(c.dom_stride_s * fps)));
}

struct Detection {
  std::optional<MovementEvent> event;
  DomSeries series;
};

// DOM is computed in chunks from `start`; an event is accepted once the
// samples its smoothed values depend on are all in.
Detection watch_for_movement(const FrameSource& source, int start, const HomographyAtlas& atlas,
                             const PipelineConfig& config, int atlas_id, int threads) {
  const double fps = source.fps();
  const int stride = dom_stride_frames(config, fps);
  const int interval = std::max(1, static_cast<int>(std::lround(config.m_seconds * fps)));
  const int chunk = 2 * interval;
  const int settle = (config.ma_window / 2 + 1) * stride;

  DomOptions dom;
  dom.detector = detector_of(config);
  dom.matcher = matcher_of(config);
  dom.ransac = config.ransac;
  dom.ransac.seed = mix_seed(config.seed, 0xd0d0 + static_cast<std::uint64_t>(atlas_id));

  MovementOptions movement;
  movement.m_seconds = config.m_seconds;
  movement.exceed_count = config.exceed_count;
  movement.window_seconds = config.threshold_window_s;

  auto forest = config.forest;
  forest.seed = mix_seed(config.seed, 0xf0 + static_cast<std::uint64_t>(atlas_id));

  Detection out;
  out.series.stride = stride;
  int next = start;
  const int n = source.frame_count();
  while (next <= n) {
    const int last = std::min(n, next + chunk - 1);
    const auto part = dom_series(source, {next, last}, stride, atlas, dom, threads);
    out.series.samples.insert(out.series.samples.end(), part.samples.begin(), part.samples.end());
    next = out.series.samples.back().t + stride;

    DomSeries analysed = out.series;
    filter_outliers(analysed, forest, config.median_window);
    analysed = smooth(analysed, config.ma_window);
    const auto events = detect_movement_events(analysed, fps, movement);
    const bool complete = next > n;
    if (!events.empty() &&
        (complete || events.front().interval.last + settle < analysed.samples.back().t)) {
      out.event = events.front();
      out.series = std::move(analysed);
      return out;
    }
    if (complete) out.series = std::move(analysed);
  }
  return out;
}

}  // namespace

HomographyAtlas calibrate(const FrameSource& source, int t, const PipelineConfig& config,
                          int atlas_id, int threads) {
  AccumulateOptions acc;
  acc.detector = detector_of(config);
  acc.matcher = matcher_of(config);
  acc.min_matches = config.min_matches;
  const FrameRange window{t, std::min(source.frame_count(), t + config.calibration_window - 1)};
  const auto matches = accumulate_matches(source, window, config.calibration_stride, acc, threads);

  AtlasOptions atlas_options;
  atlas_options.ransac = config.ransac;
  atlas_options.ransac.seed = mix_seed(config.seed, 0xa7 + static_cast<std::uint64_t>(atlas_id));
  atlas_options.min_inliers = config.min_matches;
  auto atlas = build_atlas(matches, source.camera_count(), source.reference_index(),
                           source.camera_ids(), atlas_options);
  atlas.segment_id = atlas_id;
  atlas.calibration_frame = t;
  return atlas;
}

AlignmentResult align(const FrameSource& source, const PipelineConfig& config, int threads) {
  config.validate();
  AlignmentResult result;
  const int n = source.frame_count();
  if (!config.alignment) {
    result.atlases.push_back(HomographyAtlas::identity(source.camera_count(),
                                                       source.reference_index(),
                                                       source.camera_ids()));
    result.timeline = build_timeline(n, source.fps(), {}, {});
    return result;
  }
  const auto search = search_of(config);

  // Calibrate at t, moving on to the next occlusion-free run if the views do
  // not support an atlas there.
  auto calibrate_from = [&](std::optional<int> t, int atlas_id) -> std::optional<int> {
    while (t) {
      try {
        result.atlases.push_back(calibrate(source, *t, config, atlas_id, threads));
        return t;
      } catch (const InsufficientCorrespondences& e) {
        result.warnings.push_back("calibration at frame " + std::to_string(*t) + " failed: " +
                                  e.what());
      } catch (const CalibrationFailed& e) {
        result.warnings.push_back("calibration at frame " + std::to_string(*t) + " failed: " +
                                  e.what());
      }
      t = find_calibration_frame(source, *t, search, threads, &result.doo_trace);
    }
    return std::nullopt;
  };

  auto first = find_calibration_frame(source, 1 - search.stride, search, threads,
                                      &result.doo_trace);
  if (!first) {
    result.warnings.push_back("no occlusion-free run at the start; calibrating at frame 1");
    first = 1;
  }
  auto start = calibrate_from(first, 0);
  if (!start) start = calibrate_from(1, 0);
  if (!start) throw CalibrationFailed(-1, "no frame window supports an initial atlas");

  std::vector<int> moves;
  std::vector<std::optional<int>> calibrations;
  while (true) {
    const int atlas_id = static_cast<int>(result.atlases.size()) - 1;
    auto detection =
        watch_for_movement(source, *start, result.atlases.back(), config, atlas_id, threads);
    result.dom.push_back(std::move(detection.series));
    if (!detection.event) break;
    const int t_mov = detection.event->t_mov;
    result.events.push_back(*detection.event);
    moves.push_back(t_mov);

    const auto t_hom = calibrate_from(
        find_calibration_frame(source, t_mov, search, threads, &result.doo_trace), atlas_id + 1);
    calibrations.push_back(t_hom);
    if (!t_hom) break;
    start = t_hom;
  }
  result.timeline = build_timeline(n, source.fps(), moves, calibrations);
  result.warnings.insert(result.warnings.end(), result.timeline.warnings.begin(),
                         result.timeline.warnings.end());
  for (int t : result.timeline.below_design_rate) {
    result.warnings.push_back("movement at frame " + std::to_string(t) +
                              " follows the previous one within ten minutes (below design rate)");
  }
  return result;
}

// --- reports ----------------------------------------------------------------------------

namespace {

json metrics_json(const MetricsReport& m) {
  json j = {{"itf_db", m.itf_db},
            {"frames_evaluated", m.frames_evaluated},
            {"tracked_points", m.tracked_points},
            {"psnr_cap", m.psnr_cap}};
  j["avspeed"] = m.avspeed ? json(*m.avspeed) : json(nullptr);
  return j;
}

MetricsReport metrics_from(const json& j) {
  MetricsReport m;
  m.itf_db = j.at("itf_db").get<double>();
  if (!j.at("avspeed").is_null()) m.avspeed = j.at("avspeed").get<double>();
  m.frames_evaluated = j.at("frames_evaluated").get<int>();
  m.tracked_points = j.at("tracked_points").get<int>();
  m.psnr_cap = j.at("psnr_cap").get<double>();
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text << '\n';
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string report_to_json(const RunReport& r) {
  json j;
  j["manifest"] = r.manifest;
  j["seed"] = r.seed;
  j["frame_count"] = r.frame_count;
  j["fps"] = r.fps;
  j["cameras"] = r.cameras;
  j["reference"] = r.reference;
  j["alignment"] = r.alignment;
  j["centering"] = r.centering;
  j["filling"] = r.filling;
  j["movement_events"] = r.movement_events;
  j["calibration_points"] = r.calibration_points;
  j["segment_count"] = r.segment_count;
  j["switch_events"] = r.switch_events;
  j["metrics"] = metrics_json(r.metrics);
  j["provenance_counts"] = r.provenance_counts;
  j["none_after_first"] = r.none_after_first;
  j["warnings"] = r.warnings;
  return j.dump(2);
}

RunReport report_from_json(const std::string& text) {
  const auto j = json::parse(text);
  RunReport r;
  r.manifest = j.at("manifest").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.frame_count = j.at("frame_count").get<int>();
  r.fps = j.at("fps").get<double>();
  r.cameras = j.at("cameras").get<std::vector<std::string>>();
  r.reference = j.at("reference").get<std::string>();
  r.alignment = j.at("alignment").get<bool>();
  r.centering = j.at("centering").get<bool>();
  r.filling = j.at("filling").get<bool>();
  r.movement_events = j.at("movement_events").get<std::vector<int>>();
  r.calibration_points = j.at("calibration_points").get<std::vector<int>>();
  r.segment_count = j.at("segment_count").get<int>();
  r.switch_events = j.at("switch_events").get<std::vector<int>>();
  r.metrics = metrics_from(j.at("metrics"));
  r.provenance_counts = j.at("provenance_counts").get<std::map<std::string, std::size_t>>();
  r.none_after_first = j.at("none_after_first").get<std::size_t>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

void write_run_report(const RunReport& report, const fs::path& path) {
  write_text(path, report_to_json(report));
}

RunReport read_run_report(const fs::path& path) { return report_from_json(read_text(path)); }

// --- full run ---------------------------------------------------------------------------

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

fs::path frame_file(const fs::path& dir, int t) {
  char name[32];
  std::snprintf(name, sizeof(name), "%06d.png", t);
  return dir / name;
}

void write_png(const fs::path& path, const cv::Mat& img) {
  if (!cv::imwrite(path.string(), img, {cv::IMWRITE_PNG_COMPRESSION, 1})) {
    throw Error("failed to write " + path.string());
  }
}

void write_plan(const SelectionPlan& plan, const std::vector<std::string>& ids,
                const fs::path& path) {
  json j;
  j["cadence"] = plan.cadence;
  j["dwell_min"] = plan.dwell_min;
  j["switch_events"] = plan.switch_events;
  json choice = json::array();
  for (int c : plan.choice) choice.push_back(ids.at(static_cast<std::size_t>(c)));
  j["choice"] = choice;
  write_text(path, j.dump(1));
}

}  // namespace

RunResult run_pipeline(const FrameSource& source, const PipelineConfig& config,
                       const RunOptions& options, const FrameObserver& observer) {
  try {
    config.validate();
  } catch (const Error& e) {
    throw StageError("config", e.what());
  }
  const int threads = std::max(1, options.threads);
  RunResult result;
  auto& report = result.report;
  report.manifest = options.manifest_label;
  report.seed = config.seed;
  report.frame_count = source.frame_count();
  report.fps = source.fps();
  report.cameras = source.camera_ids();
  report.reference = source.camera_ids().at(static_cast<std::size_t>(source.reference_index()));
  report.alignment = config.alignment;
  report.centering = config.centering;
  report.filling = config.filling;

  std::optional<fs::path> frames_dir, selection_dir, provenance_dir;
  if (options.out_dir) {
    fs::create_directories(*options.out_dir);
    if (options.write_frames) {
      frames_dir = *options.out_dir / "frames";
      fs::create_directories(*frames_dir);
    }
    if (options.dump_debug) {
      selection_dir = *options.out_dir / "debug" / "selection";
      provenance_dir = *options.out_dir / "debug" / "provenance";
      fs::create_directories(*selection_dir);
      fs::create_directories(*provenance_dir);
    }
  }

  auto t0 = clock_type::now();
  try {
    result.alignment = align(source, config, threads);
  } catch (const Error& e) {
    throw StageError("align", e.what());
  } catch (const cv::Exception& e) {
    throw StageError("align", e.what());
  }
  result.timings_s["align"] = seconds_since(t0);
  const auto& alignment = result.alignment;
  report.movement_events = alignment.timeline.movement_events;
  report.calibration_points = alignment.timeline.calibration_points;
  report.segment_count = static_cast<int>(alignment.timeline.segments.size());
  report.warnings = alignment.warnings;

  t0 = clock_type::now();
  try {
    const auto scores = score_ticks(
        source, config.cadence, [](const FrameStack& s) { return score_views(s); }, threads);
    result.plan = plan_selection(scores, source.frame_count(), config.cadence, config.dwell_min);
  } catch (const Error& e) {
    throw StageError("select", e.what());
  }
  report.switch_events = result.plan.switch_events;
  result.timings_s["select"] = seconds_since(t0);

  t0 = clock_type::now();
  const auto size = source.frame_size();
  CenterSmoother ema(size, config.center_alpha);
  FillHistory history;
  MetricsAccumulator metrics(detector_of(config), matcher_of(config), config.psnr_cap);
  std::map<Provenance, std::size_t> counts;
  std::size_t none_after_first = 0;
  double metrics_time = 0;

  try {
    render_selection(
        source, alignment.atlases, alignment.timeline, result.plan, threads,
        [&](RenderedFrame&& y) {
          if (selection_dir) write_png(frame_file(*selection_dir, y.t), y.image);
          RenderedFrame out = y;
          if (config.centering) out = apply_centering(out, ema.update(selected_field_centroid(y)));
          if (config.filling) {
            const auto ref = reference_view(source.image(source.reference_index(), y.t), out);
            out = fill_missing(out, ref, history, config.fill);
          }
          for (int v = 0; v <= 3; ++v) {
            const auto n = static_cast<std::size_t>(cv::countNonZero(out.provenance == v));
            counts[static_cast<Provenance>(v)] += n;
            if (v == 0 && out.t > 1) none_after_first += n;
          }
          if (frames_dir) write_png(frame_file(*frames_dir, out.t), out.image);
          if (provenance_dir) {
            write_png(frame_file(*provenance_dir, out.t), out.provenance * 80);
          }
          const auto m0 = clock_type::now();
          metrics.add(out.image);
          metrics_time += seconds_since(m0);
          if (observer) observer(y, out);
        });
  } catch (const Error& e) {
    throw StageError("render", e.what());
  }
  result.timings_s["render_enhance"] = seconds_since(t0) - metrics_time;
  result.timings_s["metrics"] = metrics_time;

  for (const auto& [p, n] : counts) report.provenance_counts[to_string(p)] = n;
  report.none_after_first = none_after_first;
  if (source.frame_count() >= 2) report.metrics = metrics.report();

  if (options.out_dir) {
    const auto& dir = *options.out_dir;
    write_timeline(alignment.timeline, dir / "timeline.json");
    write_plan(result.plan, source.camera_ids(), dir / "selection_plan.json");
    for (const auto& atlas : alignment.atlases) {
      write_atlas(atlas, dir / ("atlas_" + std::to_string(atlas.segment_id) + ".json"));
    }
    write_text(dir / "metrics.json", metrics_json(report.metrics).dump(2));
    write_run_report(report, dir / "run_report.json");
    json timings = result.timings_s;
    write_text(dir / "timings.json", timings.dump(2));
    if (options.dump_debug) {
      for (std::size_t k = 0; k < alignment.dom.size(); ++k) {
        write_dom_csv(alignment.dom[k], dir / "debug" / ("dom_" + std::to_string(k) + ".csv"));
      }
      write_doo_csv(alignment.doo_trace, source.camera_ids(), dir / "debug" / "doo.csv");
    }
  }
  return result;
}

}  // namespace mcview

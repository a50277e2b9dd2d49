#pragma once

#include "mcview/enhance.hpp"
#include "mcview/geometry.hpp"
#include "mcview/ingest.hpp"
#include "mcview/isolation_forest.hpp"
#include "mcview/metrics.hpp"
#include "mcview/motion.hpp"
#include "mcview/occlusion.hpp"
#include "mcview/selector.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mcview {

struct PipelineConfig {
  // movement detection
  bool alignment = true;  // false: identity atlas, no movement analysis
  double m_seconds = 75.0;
  int exceed_count = 4;
  double dom_stride_s = 1.0;
  int ma_window = 31;
  int median_window = 5;
  double threshold_window_s = 600.0;
  IsolationForestOptions forest{};
  // occlusion gating
  double tau_doo = 0.5;
  int n_consecutive = 5;
  int doo_stride = 30;
  // calibration
  int calibration_window = 30;
  int calibration_stride = 5;
  int min_matches = 12;
  int max_points = 1000;
  double match_ratio = 0.8;
  RansacOptions ransac{};
  // selection
  int cadence = 30;
  int dwell_min = 60;
  // enhancement
  bool centering = true;
  bool filling = true;
  double center_alpha = 0.05;
  FillOptions fill{};
  double psnr_cap = kPsnrCap;

  std::uint64_t seed = 0;

  /// Throws PreconditionError naming the first bad field.
  void validate() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const std::string& text);

/// Failure inside one pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_name(std::move(stage)) {}
  std::string stage_name;
};

struct AlignmentResult {
  Timeline timeline;
  std::vector<HomographyAtlas> atlases;  // indexed by Segment::atlas_id
  std::vector<DomSeries> dom;            // analysed series, one per atlas
  std::vector<MovementEvent> events;
  std::vector<DooSample> doo_trace;
  std::vector<std::string> warnings;
};

/// Atlas from the calibration window starting at t.
HomographyAtlas calibrate(const FrameSource& source, int t, const PipelineConfig& config,
                          int atlas_id, int threads = 1);

/// Calibrate, watch DOM for moves, re-calibrate at each t_hom.
AlignmentResult align(const FrameSource& source, const PipelineConfig& config, int threads = 1);

struct RunReport {
  std::string manifest;
  std::uint64_t seed = 0;
  int frame_count = 0;
  double fps = 30.0;
  std::vector<std::string> cameras;
  std::string reference;
  bool alignment = true;
  bool centering = true;
  bool filling = true;
  std::vector<int> movement_events;
  std::vector<int> calibration_points;
  int segment_count = 0;
  std::vector<int> switch_events;
  MetricsReport metrics;
  std::map<std::string, std::size_t> provenance_counts;
  std::size_t none_after_first = 0;  // provenance-none pixels in frames 2..N
  std::vector<std::string> warnings;
};

std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);
void write_run_report(const RunReport& report, const std::filesystem::path& path);
RunReport read_run_report(const std::filesystem::path& path);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // nothing is written without it
  bool write_frames = true;
  bool dump_debug = false;
  int threads = 1;
  std::string manifest_label;  // recorded in the report
};

struct RunResult {
  RunReport report;
  AlignmentResult alignment;
  SelectionPlan plan;
  std::map<std::string, double> timings_s;
};

/// Optional per-frame observer: (selection output Y_t, enhanced output Y'_t).
using FrameObserver = std::function<void(const RenderedFrame&, const RenderedFrame&)>;

RunResult run_pipeline(const FrameSource& source, const PipelineConfig& config,
                       const RunOptions& options, const FrameObserver& observer = {});

}  // namespace mcview

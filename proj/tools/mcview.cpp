#include "mcview/metrics.hpp"
#include "mcview/pipeline.hpp"
#include "mcview/synthgen.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace mcview;

namespace {

struct RunArgs {
  std::string manifest;
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool no_center = false;
  bool no_fill = false;
  bool no_align = false;
  bool dump_debug = false;
};

int do_run(const RunArgs& args) {
  PipelineConfig config;
  try {
    if (!args.config.empty()) config = load_config(args.config);
    if (args.seed) config.seed = *args.seed;
    if (args.no_center) config.centering = false;
    if (args.no_fill) config.filling = false;
    if (args.no_align) config.alignment = false;
    config.validate();
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }

  std::unique_ptr<ManifestSource> source;
  try {
    source = std::make_unique<ManifestSource>(load_manifest(args.manifest));
  } catch (const std::exception& e) {
    throw StageError("ingest", e.what());
  }

  RunOptions options;
  options.out_dir = fs::path(args.out);
  options.dump_debug = args.dump_debug;
  options.threads = args.threads;
  options.manifest_label = args.manifest;
  const auto result = run_pipeline(*source, config, options);

  const auto& r = result.report;
  std::cout << "frames " << r.frame_count << ", cameras " << r.cameras.size() << ", segments "
            << r.segment_count << ", switches " << r.switch_events.size() << '\n';
  for (std::size_t k = 0; k < r.movement_events.size(); ++k) {
    std::cout << "  movement at " << r.movement_events[k];
    if (k < r.calibration_points.size()) {
      std::cout << ", recalibrated at " << r.calibration_points[k];
    }
    std::cout << '\n';
  }
  std::cout << "ITF " << r.metrics.itf_db << " dB, AvSpeed ";
  if (r.metrics.avspeed) {
    std::cout << *r.metrics.avspeed << " px/frame\n";
  } else {
    std::cout << "no data\n";
  }
  for (const auto& [stage, s] : result.timings_s) std::cout << "  " << stage << " " << s << " s\n";
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "report: " << (fs::path(args.out) / "run_report.json").string() << '\n';
  return 0;
}

nlohmann::json metrics_json(const MetricsReport& m) {
  nlohmann::json j = {{"itf_db", m.itf_db},
                      {"frames_evaluated", m.frames_evaluated},
                      {"tracked_points", m.tracked_points}};
  j["avspeed"] = m.avspeed ? nlohmann::json(*m.avspeed) : nlohmann::json(nullptr);
  return j;
}

int do_evaluate(const std::string& a, const std::string& b) {
  MetricsReport ra, rb;
  try {
    ra = evaluate_frames(read_frame_directory(a));
    rb = evaluate_frames(read_frame_directory(b));
  } catch (const std::exception& e) {
    throw StageError("evaluate", e.what());
  }
  const auto cmp = compare(ra, rb);
  nlohmann::json j;
  j["a"] = metrics_json(cmp.a);
  j["b"] = metrics_json(cmp.b);
  j["itf_ratio"] = cmp.itf_ratio;
  j["avspeed_ratio"] =
      cmp.avspeed_ratio ? nlohmann::json(*cmp.avspeed_ratio) : nlohmann::json(nullptr);
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-camera surgical view pipeline"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "align, select, enhance and evaluate a recording");
  run_cmd->add_option("--manifest", run.manifest, "manifest JSON")->required();
  run_cmd->add_option("--out", run.out, "output directory")->required();
  run_cmd->add_option("--config", run.config, "config JSON; flags override it");
  run_cmd->add_option("--seed", run.seed, "root seed");
  run_cmd->add_option("--threads", run.threads, "worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--no-center", run.no_center, "disable field centering");
  run_cmd->add_flag("--no-fill", run.no_fill, "disable missing-pixel filling");
  run_cmd->add_flag("--no-align", run.no_align, "skip alignment (identity atlas baseline)");
  run_cmd->add_flag("--dump-debug", run.dump_debug, "write selection frames, masks, DOM/DOO");

  std::string video_a, video_b;
  auto* eval_cmd = app.add_subcommand("evaluate", "compare ITF and AvSpeed of two frame folders");
  eval_cmd->add_option("a", video_a, "first video (directory of PNG frames)")->required();
  eval_cmd->add_option("b", video_b, "second video")->required();

  std::string preset = "static", synth_out, scenario_file;
  std::uint64_t synth_seed = 1;
  int width = 640, height = 480, frames = 300, synth_threads = 1;
  auto* synth_cmd = app.add_subcommand("synth", "render a simulator scenario to disk");
  synth_cmd->add_option("--preset", preset, "static, offcenter, switching or moving");
  synth_cmd->add_option("--scenario", scenario_file, "scenario JSON (overrides --preset)");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "render seed");
  synth_cmd->add_option("--width", width)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--height", height)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--frames", frames)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--threads", synth_threads)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return do_run(run);
    if (*eval_cmd) return do_evaluate(video_a, video_b);
    const auto scenario = scenario_file.empty() ? preset_scenario(preset, width, height, frames)
                                                : read_scenario(scenario_file);
    const auto out = render(scenario, synth_seed, synth_out, synth_threads);
    std::cout << "manifest: " << out.manifest.string() << "\nground truth: "
              << out.ground_truth.string() << '\n';
    return 0;
  } catch (const StageError& e) {
    std::cerr << "error in stage " << e.stage_name << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

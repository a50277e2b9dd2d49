#include "mcview/selector.hpp"

#include "mcview/occlusion.hpp"

namespace mcview {

std::vector<double> score_views(const FrameStack& stack, int threads) {
  std::vector<double> scores(stack.images.size());
  parallel_for(stack.images.size(), threads, [&](std::size_t c) {
    scores[c] = static_cast<double>(field_area(stack.images[c]));
  });
  return scores;
}

std::vector<int> selection_ticks(int frame_count, int cadence) {
  if (cadence < 1) throw PreconditionError("cadence must be >= 1");
  std::vector<int> ticks;
  for (int t = 1; t <= frame_count; t += cadence) ticks.push_back(t);
  return ticks;
}

SelectionPlan plan_selection(const std::vector<std::vector<double>>& tick_scores,
                             int frame_count, int cadence, int dwell_min) {
  const auto ticks = selection_ticks(frame_count, cadence);
  if (tick_scores.size() != ticks.size()) {
    throw PreconditionError("expected one score vector per selection tick");
  }
  SelectionPlan plan;
  plan.cadence = cadence;
  plan.dwell_min = dwell_min;
  plan.choice.assign(static_cast<std::size_t>(frame_count), 0);

  int current = -1;
  int last_switch = 1;
  for (std::size_t k = 0; k < ticks.size(); ++k) {
    const auto& s = tick_scores[k];
    if (s.empty()) throw PreconditionError("empty score vector");
    int best = current >= 0 && current < static_cast<int>(s.size()) ? current : 0;
    for (int c = 0; c < static_cast<int>(s.size()); ++c) {
      if (s[static_cast<std::size_t>(c)] > s[static_cast<std::size_t>(best)]) best = c;
    }
    const int t = ticks[k];
    if (current < 0) {
      current = best;
    } else if (best != current && t - last_switch >= dwell_min) {
      current = best;
      last_switch = t;
      plan.switch_events.push_back(t);
    }
    const int end = std::min(frame_count, t + cadence - 1);
    for (int u = t; u <= end; ++u) plan.choice[static_cast<std::size_t>(u - 1)] = current;
  }
  return plan;
}

std::vector<std::vector<double>> score_ticks(const FrameSource& source, int cadence,
                                             const ViewScorer& scorer, int threads) {
  const auto ticks = selection_ticks(source.frame_count(), cadence);
  std::vector<std::vector<double>> scores(ticks.size());
  parallel_for(ticks.size(), threads,
               [&](std::size_t k) { scores[k] = scorer(source.stack(ticks[k])); });
  return scores;
}

RenderedFrame render_frame(const FrameSource& source, const std::vector<HomographyAtlas>& atlases,
                           const Timeline& timeline, const SelectionPlan& plan, int t) {
  const int camera = plan.camera_at(t);
  if (camera < 0 || camera >= source.camera_count()) {
    throw PreconditionError("selection refers to a camera outside the manifest");
  }
  const auto& segment = timeline.segment_at(t);
  const auto& atlas = atlases.at(static_cast<std::size_t>(segment.atlas_id));

  RenderedFrame f;
  f.t = t;
  f.source_camera = camera;
  f.source_id = source.camera_ids()[static_cast<std::size_t>(camera)];
  f.segment = segment.atlas_id;
  f.stale = segment.stale;

  const auto size = source.frame_size();
  const auto canvas = DoubleCanvas::around(size);
  auto warped = warp(source.image(camera, t), atlas.to_reference[static_cast<std::size_t>(camera)],
                     canvas.size, canvas.origin);
  f.canvas = std::move(warped.image);
  f.canvas_valid = std::move(warped.valid);
  f.canvas_origin = canvas.origin;

  const auto window = crop_window(f, size, {});
  f.image = crop_canvas(f.canvas, window, cv::Scalar::all(0));
  f.validity = crop_canvas(f.canvas_valid, window, cv::Scalar(0));
  f.provenance = cv::Mat::zeros(size, CV_8UC1);
  f.provenance.setTo(static_cast<int>(Provenance::selected), f.validity);
  return f;
}

void render_selection(const FrameSource& source, const std::vector<HomographyAtlas>& atlases,
                      const Timeline& timeline, const SelectionPlan& plan, int threads,
                      const std::function<void(RenderedFrame&&)>& sink) {
  const int n = plan.frame_count();
  const int batch = std::max(1, threads) * 4;
  std::vector<RenderedFrame> frames;
  for (int first = 1; first <= n; first += batch) {
    const int count = std::min(batch, n - first + 1);
    frames.assign(static_cast<std::size_t>(count), {});
    parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
      frames[i] = render_frame(source, atlases, timeline, plan, first + static_cast<int>(i));
    });
    for (auto& f : frames) sink(std::move(f));
  }
}

}  // namespace mcview

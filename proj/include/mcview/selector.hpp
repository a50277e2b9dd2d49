#pragma once

#include "mcview/geometry.hpp"
#include "mcview/ingest.hpp"
#include "mcview/motion.hpp"
#include "mcview/rendered_frame.hpp"

#include <functional>
#include <vector>

namespace mcview {

/// Per-camera visibility score of one raw stack; larger means less occluded.
using ViewScorer = std::function<std::vector<double>(const FrameStack&)>;

/// Default scorer: surgical-field area S_t of each camera.
std::vector<double> score_views(const FrameStack& stack, int threads = 1);

struct SelectionPlan {
  std::vector<int> choice;         // camera index for frames 1..N (choice[t-1])
  std::vector<int> switch_events;  // frames where the choice changes
  int cadence = 30;
  int dwell_min = 60;

  int frame_count() const { return static_cast<int>(choice.size()); }
  int camera_at(int t) const { return choice.at(static_cast<std::size_t>(t - 1)); }
};

/// Frames at which the plan is re-evaluated: 1, 1 + cadence, ...
std::vector<int> selection_ticks(int frame_count, int cadence);

/// tick_scores[k] holds the scores at tick k. Each tick picks the argmax,
/// keeping the incumbent on ties and otherwise the lowest camera index; a
/// switch is suppressed until dwell_min frames have passed since the previous
/// switch (or since frame 1).
SelectionPlan plan_selection(const std::vector<std::vector<double>>& tick_scores,
                             int frame_count, int cadence, int dwell_min);

/// Scores every tick of a source (parallel over ticks).
std::vector<std::vector<double>> score_ticks(const FrameSource& source, int cadence,
                                             const ViewScorer& scorer, int threads = 1);

/// Selected camera's view of frame t warped into reference coordinates.
RenderedFrame render_frame(const FrameSource& source, const std::vector<HomographyAtlas>& atlases,
                           const Timeline& timeline, const SelectionPlan& plan, int t);

/// Renders frames 1..N in order, handing each to `sink`.
void render_selection(const FrameSource& source, const std::vector<HomographyAtlas>& atlases,
                      const Timeline& timeline, const SelectionPlan& plan, int threads,
                      const std::function<void(RenderedFrame&&)>& sink);

}  // namespace mcview

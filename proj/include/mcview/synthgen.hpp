#pragma once

#include "mcview/common.hpp"
#include "mcview/geometry.hpp"
#include "mcview/ingest.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace mcview {

/// Pose of the lamp head. The five cameras are rigidly mounted on a pentagon
/// around the lamp axis and converge on a focal point `focus_mm` below it.
struct RigPose {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double height_mm = 1000.0;
  double yaw_deg = 0.0;
  double tilt_x_deg = 0.0;
  double tilt_y_deg = 0.0;
};

/// The rig starts moving at `frame` and reaches `pose` after
/// `duration_frames` frames.
struct RigMove {
  int frame = 1;
  int duration_frames = 1;
  RigPose pose;
};

/// Flat-coloured disc drawn into one camera's image (e.g. a surgeon's head).
/// Its centre travels linearly from `from` to `to` over [first, last].
struct Occluder {
  int camera = 0;
  int first = 1;
  int last = 1;
  Vec2 from;
  Vec2 to;
  double radius = 0.0;
  int hue = 100;  // 0..179 scale
};

struct Scenario {
  int width = 640;
  int height = 480;
  int camera_count = 5;
  int reference = 0;
  int duration = 300;  // frames
  double fps = 30.0;
  double noise_sigma = 2.0;

  double rig_radius_mm = 250.0;
  double focus_mm = 1000.0;
  double field_radius_mm = 100.0;
  double field_fraction = 0.45;  // field diameter / image width at the initial pose

  RigPose initial_pose;
  std::vector<RigMove> rig_moves;  // sorted by frame
  std::vector<Occluder> occluders;

  /// Validates the invariants; throws PreconditionError.
  void validate() const;
  RigPose pose_at(int t) const;
};

/// Ground truth for one stationary stretch of the rig.
struct TruthSegment {
  int first = 1;
  int last = 1;
  std::vector<Homography> to_reference;  // image c -> reference image
};

struct GroundTruth {
  std::vector<int> movements;  // t_mov: frames at which each move starts
  std::vector<TruthSegment> segments;
  /// occlusion[t-1][c]: fraction of camera c's field covered by occluders.
  std::vector<std::vector<double>> occlusion;
};

/// Deterministic renderer of a Scenario. Doubles as an in-memory FrameSource
/// that renders frames on demand.
class SyntheticRig final : public FrameSource {
 public:
  SyntheticRig(Scenario scenario, std::uint64_t seed);

  const std::vector<std::string>& camera_ids() const override { return ids_; }
  int frame_count() const override { return scenario_.duration; }
  double fps() const override { return scenario_.fps; }
  int reference_index() const override { return scenario_.reference; }
  cv::Size frame_size() const override { return {scenario_.width, scenario_.height}; }
  Image image(int camera, int t) const override;

  const Scenario& scenario() const { return scenario_; }

  /// Plane (mm) -> image projection of camera c at a pose.
  Homography plane_to_image(int camera, const RigPose& pose) const;
  /// True warp of camera c into the reference image at frame t.
  Homography true_to_reference(int camera, int t) const;
  std::vector<Homography> true_atlas(int t) const;

  /// Binary field label of camera c at frame t (255 inside the field),
  /// ignoring occluders.
  Mask field_label(int camera, int t) const;
  /// Fraction of the field of camera c covered by occluders at frame t.
  double occlusion_fraction(int camera, int t) const;

  /// Noise-free render of the plane texture in reference coordinates of the
  /// initial pose (the identity view), for the reference-view invariant.
  Image texture_view() const;

  GroundTruth ground_truth(bool with_occlusion = true) const;

 private:
  Image render(int camera, int t, bool with_noise) const;

  Scenario scenario_;
  std::uint64_t seed_;
  std::vector<std::string> ids_;
  Homography plane_to_texture_;  // mm -> initial reference image coords
  Image texture_;                // covers reference coords [-W, 2W) x [-H, 2H)
  Mask field_texture_;
};

/// Places a disc on camera `camera`'s field centroid, sized so it hides
/// `coverage` of the field at interval.first (within 2%).
Scenario inject_occluder(const Scenario& scenario, int camera, double coverage,
                         FrameRange interval);

/// A lamp repositioning: arms occlude `arm_cameras` from `lead` frames before
/// the move until `trail` frames after it settles.
Scenario add_lamp_move(const Scenario& scenario, int frame, const RigPose& pose,
                       int duration_frames, const std::vector<int>& arm_cameras, int lead,
                       int trail, double arm_coverage = 0.6);

struct RenderedScenario {
  std::filesystem::path manifest;
  std::filesystem::path ground_truth;
};

/// Writes camera frame directories, a manifest and the ground-truth sidecar.
RenderedScenario render(const Scenario& scenario, std::uint64_t seed,
                        const std::filesystem::path& out_dir, int threads = 1);

void write_ground_truth(const GroundTruth& truth, const std::vector<std::string>& ids,
                        const std::filesystem::path& path);
GroundTruth read_ground_truth(const std::filesystem::path& path);

void write_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario read_scenario(const std::filesystem::path& path);

/// Named scenario presets used by the CLI: "static", "offcenter",
/// "switching", "moving".
Scenario preset_scenario(const std::string& name, int width, int height, int frames);

}  // namespace mcview

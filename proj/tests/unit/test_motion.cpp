#include "mcview/motion.hpp"
#include "mcview/synthgen.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mcview;
using namespace mcview::testing;

namespace {

DomSeries series_of(const std::vector<double>& values, int stride = 1, int first = 1) {
  DomSeries s;
  s.stride = stride;
  for (std::size_t i = 0; i < values.size(); ++i) {
    s.samples.push_back({first + static_cast<int>(i) * stride, values[i]});
  }
  return s;
}

std::vector<double> smoothed_values(const DomSeries& s) {
  std::vector<double> out;
  for (const auto& v : s.smoothed) out.push_back(v.value_or(-1.0));
  return out;
}

// Independent oracle for threshold(): the two terms of the rule, written out.
double tau_oracle(std::vector<double> v) {
  if (v.empty()) return 0.0;
  double mx = -1e300, mean = 0;
  for (double x : v) {
    mx = x > mx ? x : mx;
    mean += x / static_cast<double>(v.size());
  }
  return std::min(mx + 1.0, 2.0 * mean);
}

}  // namespace

TEST(Dom, ExactlyConsistentMatchesScoreZero) {
  std::mt19937_64 rng(1);
  auto atlas = HomographyAtlas::identity(4, 0);
  for (int c = 1; c < 4; ++c) atlas.to_reference[c] = random_homography(rng);
  MatchSet set;
  std::uniform_real_distribution<double> u(0, 400);
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      const auto h = atlas.between(a, b);
      for (int i = 0; i < 25; ++i) {
        const Vec2 p{u(rng), u(rng)};
        set.pairs[{a, b}].push_back({p, h.apply(p)});
      }
    }
  }
  const auto d = degree_of_misalignment(set, atlas);
  ASSERT_TRUE(d);
  EXPECT_LE(*d, 1e-9);
}

TEST(Dom, MeanOfTransferErrors) {
  const auto atlas = HomographyAtlas::identity(2, 0);
  MatchSet set;
  set.pairs[{0, 1}] = {{{10, 10}, {13, 10}}, {{50, 20}, {50, 25}}};
  EXPECT_DOUBLE_EQ(*degree_of_misalignment(set, atlas), 4.0);
  EXPECT_FALSE(degree_of_misalignment(MatchSet{}, atlas).has_value());
}

TEST(Dom, VerifiedMatchesDropOutliersAndThinPairs) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 300);
  const auto h = random_homography(rng, 300);
  MatchSet set;
  for (int i = 0; i < 60; ++i) {
    const Vec2 p{u(rng), u(rng)};
    set.pairs[{0, 1}].push_back({p, h.apply(p)});
  }
  for (int i = 0; i < 15; ++i) set.pairs[{0, 1}].push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
  for (int i = 0; i < 5; ++i) set.pairs[{0, 2}].push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
  const auto kept = verified_matches(set, {}, 3);
  EXPECT_EQ(kept.per_pair_count(0, 2), 0u);
  EXPECT_GE(kept.per_pair_count(0, 1), 60u);
  EXPECT_LE(kept.per_pair_count(0, 1), 62u);
}

TEST(Dom, StaticRigStaysLowAndMovedRigIsLarge) {
  auto scenario = preset_scenario("static", 640, 480, 2);
  RigPose moved;
  moved.tilt_x_deg = 5.0;
  moved.height_mm = 950.0;
  scenario.rig_moves.push_back({1, 1, moved});
  SyntheticRig rig(scenario, 4);
  auto before = HomographyAtlas::identity(5, 0);
  // Atlas of the initial pose, taken from ground truth.
  auto initial = scenario;
  initial.rig_moves.clear();
  before.to_reference = SyntheticRig(initial, 4).true_atlas(1);
  const auto d_static = dom_at(SyntheticRig(initial, 4).stack(1), before);
  ASSERT_TRUE(d_static);
  EXPECT_LT(*d_static, 2.0);
  const auto d_moved = dom_at(rig.stack(2), before);
  ASSERT_TRUE(d_moved);
  EXPECT_GT(*d_moved, 20.0);
}

TEST(Threshold, ConstantSeries) {
  EXPECT_DOUBLE_EQ(threshold(std::vector<double>(10, 0.5)), 1.0);
  EXPECT_DOUBLE_EQ(threshold(std::vector<double>(10, 2.0)), 3.0);
  EXPECT_DOUBLE_EQ(threshold(std::vector<double>(10, 0.0)), 0.0);
  EXPECT_DOUBLE_EQ(threshold({}), 0.0);
}

// Property: permutation invariance, checked against the oracle.
TEST(Threshold, PropertyPermutationInvariant) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> e(0.5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(1 + rng() % 50);
    for (auto& x : v) x = e(rng);
    const double t = threshold(v);
    EXPECT_NEAR(t, tau_oracle(v), 1e-12);
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_NEAR(threshold(v), t, 1e-12);
  }
}

TEST(Smooth, ConstantWindowOneAndSpike) {
  const auto c = smooth(series_of(std::vector<double>(40, 3.0)), 31);
  for (double v : smoothed_values(c)) EXPECT_DOUBLE_EQ(v, 3.0);

  std::vector<double> raw{1, 5, 2, 8, 3};
  EXPECT_EQ(smoothed_values(smooth(series_of(raw), 1)), raw);

  std::vector<double> spike(101, 0.0);
  spike[50] = 31.0;
  const auto s = smooth(series_of(spike), 31);
  for (int i = 35; i <= 65; ++i) EXPECT_NEAR(*s.smoothed[i], 1.0, 1e-12) << i;
  EXPECT_DOUBLE_EQ(*s.smoothed[34], 0.0);
  EXPECT_THROW(smooth(series_of(raw), 4), PreconditionError);
}

TEST(Smooth, SkipsOutliersAndMissing) {
  auto s = series_of({1, 1, 100, 1, 1});
  s.samples[1].value.reset();
  s.inlier = {true, false, false, true, true};
  const auto out = smooth(s, 3);
  EXPECT_FALSE(out.smoothed[1]);
  EXPECT_FALSE(out.smoothed[2]);
  EXPECT_DOUBLE_EQ(*out.smoothed[3], 1.0);
  EXPECT_DOUBLE_EQ(*out.smoothed[0], 1.0);
}

TEST(FilterOutliers, SpikesGoLevelShiftsStay) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 0.05);
  std::vector<double> v;
  for (int i = 0; i < 400; ++i) v.push_back((i < 200 ? 0.3 : 25.0) + n(rng));
  v[100] = 40.0;
  v[300] = 90.0;
  auto s = series_of(v);
  IsolationForestOptions opt;
  opt.seed = 1;
  filter_outliers(s, opt, 5);
  EXPECT_FALSE(s.inlier[100]);
  EXPECT_FALSE(s.inlier[300]);
  int inliers_after_step = 0;
  for (int i = 205; i < 295; ++i) inliers_after_step += s.inlier[i] ? 1 : 0;
  EXPECT_GE(inliers_after_step, 70);
}

TEST(DetectMovements, BelowThresholdGivesNothing) {
  std::vector<double> flat(600, 0.4);
  EXPECT_TRUE(detect_movements(series_of(flat), 1.0).empty());
}

TEST(DetectMovements, StepGivesOneEventNearTheMove) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 0.05);
  for (int move : {180, 260, 333}) {
    std::vector<double> v;
    for (int i = 1; i <= 900; ++i) v.push_back((i < move ? 0.3 : 30.0) + std::abs(n(rng)));
    const auto events = detect_movements(smooth(series_of(v), 31), 1.0);
    ASSERT_EQ(events.size(), 1u) << "move " << move;
    EXPECT_LE(std::abs(events[0] - move), 75) << "move " << move;
  }
}

TEST(DetectMovements, ThreeExceedancesAreNotEnough) {
  std::vector<double> v(150, 0.0);
  v[10] = v[20] = v[30] = 5.0;
  EXPECT_TRUE(detect_movements(series_of(v), 1.0).empty());
  v[40] = 5.0;
  EXPECT_EQ(detect_movements(series_of(v), 1.0).size(), 1u);
}

TEST(DetectMovements, SecondsAndStrideMapToFrames) {
  // 30 fps, one sample per second: interval = 75 s = 2250 frames.
  std::vector<double> v;
  for (int i = 0; i < 600; ++i) v.push_back(i < 300 ? 0.2 : 15.0);
  const auto events = detect_movements(series_of(v, 30, 1), 30.0);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_LE(std::abs(events[0] - (1 + 300 * 30)), 2250);
}

// Property: with tau on its 2*mean branch everywhere, scaling the series by
// k > 0 leaves the events unchanged.
TEST(DetectMovements, PropertyScaleInvariantInMeanBranch) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 400 + static_cast<int>(rng() % 400);
    const int move = 100 + static_cast<int>(rng() % (n - 200));
    std::vector<double> v;
    for (int i = 1; i <= n; ++i) {
      double x = (i < move ? 1.0 : 10.0) * (0.9 + 0.2 * u(rng));
      if (rng() % 40 == 0) x += 60.0;  // sparse tall values keep max + 1 above 2 * mean
      v.push_back(x);
    }
    const auto base = series_of(v);
    // Precondition of the property: the mean branch binds in every voting window.
    bool mean_branch = true;
    for (int a = 1; a <= n; a += 75) {
      std::vector<double> w;
      for (int t = std::max(1, a + 75 - 600); t < a + 75 && t <= n; ++t) w.push_back(v[t - 1]);
      double mx = 0, mean = 0;
      for (double x : w) {
        mx = std::max(mx, x);
        mean += x / static_cast<double>(w.size());
      }
      for (double k : {0.05, 1.0, 40.0}) mean_branch &= 2 * k * mean < k * mx + 1.0;
    }
    if (!mean_branch) continue;
    ++checked;
    const auto events = detect_movements(base, 1.0);
    for (double k : {0.05, 3.0, 40.0}) {
      auto scaled = v;
      for (auto& x : scaled) x *= k;
      EXPECT_EQ(detect_movements(series_of(scaled), 1.0), events) << "k " << k;
    }
  }
  EXPECT_GE(checked, 10);
}

TEST(Timeline, NoEventsIsOneSegment) {
  const auto tl = build_timeline(1800, 30.0, {}, {});
  ASSERT_EQ(tl.segments.size(), 1u);
  EXPECT_EQ(tl.segments[0].first, 1);
  EXPECT_EQ(tl.segments[0].last, 1800);
  EXPECT_FALSE(tl.segments[0].stale);
}

TEST(Timeline, MoveAndRecalibration) {
  const auto tl = build_timeline(60000, 30.0, {30000}, {30900});
  ASSERT_EQ(tl.segments.size(), 3u);
  EXPECT_EQ(tl.segments[0].first, 1);
  EXPECT_EQ(tl.segments[0].last, 30000);
  EXPECT_TRUE(tl.segments[1].stale);
  EXPECT_EQ(tl.segments[1].first, 30001);
  EXPECT_EQ(tl.segments[1].last, 30899);
  EXPECT_EQ(tl.segments[1].atlas_id, 0);
  EXPECT_EQ(tl.segments[2].first, 30900);
  EXPECT_EQ(tl.segments[2].last, 60000);
  EXPECT_EQ(tl.segments[2].atlas_id, 1);
  EXPECT_EQ(tl.calibration_points, std::vector<int>{30900});
  EXPECT_EQ(tl.segment_at(30500).atlas_id, 0);
}

TEST(Timeline, CloseMovesAreFlagged) {
  const auto tl = build_timeline(40000, 30.0, {3000, 9000}, {3300, 9300});
  EXPECT_EQ(tl.movement_events.size(), 2u);
  EXPECT_EQ(tl.below_design_rate, std::vector<int>{9000});
}

TEST(Timeline, MissingRecalibrationKeepsStaleAtlas) {
  const auto tl = build_timeline(1000, 30.0, {400}, {std::nullopt});
  ASSERT_EQ(tl.segments.size(), 2u);
  EXPECT_TRUE(tl.segments[1].stale);
  EXPECT_EQ(tl.segments[1].last, 1000);
  EXPECT_FALSE(tl.warnings.empty());
}

// Property: segments partition [1, N] for random event scripts.
TEST(Timeline, PropertyPartition) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 50 + static_cast<int>(rng() % 5000);
    std::vector<int> moves;
    std::vector<std::optional<int>> hom;
    int t = 1;
    while (true) {
      t += 1 + static_cast<int>(rng() % 800);
      if (t > n) break;
      moves.push_back(t);
      const int h = t + static_cast<int>(rng() % 200);
      if (rng() % 10 == 0 || h > n) {
        hom.push_back(std::nullopt);
        break;
      }
      hom.push_back(h == t ? h + 1 : h);
      t = *hom.back();
      if (t > n) {
        hom.back() = std::nullopt;
        break;
      }
    }
    const auto tl = build_timeline(n, 30.0, moves, hom);
    int expected = 1;
    for (const auto& s : tl.segments) {
      ASSERT_EQ(s.first, expected);
      ASSERT_GE(s.last, s.first);
      expected = s.last + 1;
    }
    ASSERT_EQ(expected, n + 1);
  }
}

TEST(Timeline, RoundTrip) {
  TempDir dir("timeline");
  const auto tl = build_timeline(40000, 30.0, {3000, 9000}, {3300, 9300});
  write_timeline(tl, dir / "t.json");
  const auto back = read_timeline(dir / "t.json");
  EXPECT_EQ(back.movement_events, tl.movement_events);
  EXPECT_EQ(back.calibration_points, tl.calibration_points);
  EXPECT_EQ(back.below_design_rate, tl.below_design_rate);
  ASSERT_EQ(back.segments.size(), tl.segments.size());
  for (std::size_t i = 0; i < tl.segments.size(); ++i) {
    EXPECT_EQ(back.segments[i].first, tl.segments[i].first);
    EXPECT_EQ(back.segments[i].stale, tl.segments[i].stale);
    EXPECT_EQ(back.segments[i].atlas_id, tl.segments[i].atlas_id);
  }
}

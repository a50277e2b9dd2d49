#include "mcview/geometry.hpp"
#include "mcview/synthgen.hpp"
#include "support.hpp"

#include <Eigen/LU>
#include <gtest/gtest.h>
#include <opencv2/imgproc.hpp>

#include <random>

using namespace mcview;
using namespace mcview::testing;

namespace {

double max_element_diff(const Homography& a, const Homography& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

std::vector<Vec2> random_points(std::mt19937_64& rng, int n, double w, double h) {
  std::uniform_real_distribution<double> ux(0, w), uy(0, h);
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) pts.push_back({ux(rng), uy(rng)});
  return pts;
}

double psnr_oracle(const Image& a, const Image& b, const Mask& where) {
  double se = 0;
  std::size_t n = 0;
  for (int y = 0; y < a.rows; ++y) {
    for (int x = 0; x < a.cols; ++x) {
      if (!where.at<std::uint8_t>(y, x)) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = a.at<cv::Vec3b>(y, x)[c] - b.at<cv::Vec3b>(y, x)[c];
        se += d * d;
        ++n;
      }
    }
  }
  return 10 * std::log10(255.0 * 255.0 / (se / static_cast<double>(n)));
}

HomographyAtlas atlas_from(const std::vector<Homography>& hs) {
  auto atlas = HomographyAtlas::identity(static_cast<int>(hs.size()), 0);
  atlas.to_reference = hs;
  return atlas;
}

}  // namespace

TEST(Homography, IdentityAndNormalisation) {
  const Homography id;
  EXPECT_TRUE(id.is_identity());
  EXPECT_EQ(id.apply({3.5, -2}), (Vec2{3.5, -2}));
  Eigen::Matrix3d m;
  m << 2, 0, 4, 0, 2, 6, 0, 0, 2;
  const Homography h(m);
  EXPECT_DOUBLE_EQ(h.matrix()(2, 2), 1.0);
  EXPECT_NEAR(h.apply({1, 1}).x, 3.0, 1e-12);
  EXPECT_TRUE(Homography::translation(0, 0).is_identity());
}

// Property: (h2 * h1)(p) == h2(h1(p)).
TEST(Homography, PropertyCompositionAssociative) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto h1 = random_homography(rng);
    const auto h2 = random_homography(rng);
    const auto h3 = random_homography(rng);
    for (const auto& p : random_points(rng, 5, 400, 400)) {
      const auto a = (h2 * h1).apply(p);
      const auto b = h2.apply(h1.apply(p));
      EXPECT_NEAR(a.x, b.x, 1e-9);
      EXPECT_NEAR(a.y, b.y, 1e-9);
      const auto c = ((h3 * h2) * h1).apply(p);
      const auto d = (h3 * (h2 * h1)).apply(p);
      EXPECT_NEAR(c.x, d.x, 1e-9);
      EXPECT_NEAR(c.y, d.y, 1e-9);
    }
    EXPECT_TRUE((h1 * h1.inverse()).is_identity(1e-9));
    EXPECT_GT(std::abs(h1.matrix().determinant()), 1e-9);
  }
}

TEST(Estimate, FourExactCornersRecoverTheMap) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = random_homography(rng);
    std::vector<Correspondence> corr;
    for (Vec2 p : {Vec2{0, 0}, Vec2{400, 0}, Vec2{400, 400}, Vec2{0, 400}}) {
      corr.push_back({p, h.apply(p)});
    }
    const auto est = estimate_homography(corr);
    EXPECT_LE(max_element_diff(est.h, h), 1e-6);
    EXPECT_EQ(est.inlier_count, 4);
  }
}

TEST(Estimate, IdentityCorrespondences) {
  std::mt19937_64 rng(4);
  std::vector<Correspondence> corr;
  for (const auto& p : random_points(rng, 30, 300, 200)) corr.push_back({p, p});
  EXPECT_LE(max_element_diff(estimate_homography(corr).h, Homography{}), 1e-9);
}

TEST(Estimate, RejectsThirtyPercentOutliers) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 400);
  for (int trial = 0; trial < 5; ++trial) {
    const auto h = random_homography(rng);
    std::vector<Correspondence> corr;
    for (const auto& p : random_points(rng, 100, 400, 400)) corr.push_back({p, h.apply(p)});
    for (int i = 0; i < 30; ++i) corr.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
    std::shuffle(corr.begin(), corr.end(), rng);
    RansacOptions opt;
    opt.seed = static_cast<std::uint64_t>(trial);
    const auto est = estimate_homography(corr, opt);
    EXPECT_GE(est.inlier_count, 95);
    double worst = 0;
    for (std::size_t i = 0; i < corr.size(); ++i) {
      const auto truth = h.apply(corr[i].a);
      if (norm(truth - corr[i].b) < 1e-9) worst = std::max(worst, norm(est.h.apply(corr[i].a) - truth));
    }
    EXPECT_LE(worst, 0.5);
  }
}

TEST(Estimate, DegenerateInputs) {
  std::vector<Correspondence> three{{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
  EXPECT_THROW(estimate_homography(three), PreconditionError);
  std::vector<Correspondence> line;
  for (int i = 0; i < 10; ++i) line.push_back({{double(i), 2.0 * i}, {double(i), 2.0 * i}});
  EXPECT_THROW(estimate_homography(line), DegenerateConfiguration);
}

// Property: scaling all coordinates by s conjugates the estimate by S.
TEST(Estimate, PropertyInvariantToUniformScaling) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0, 0.7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = random_homography(rng);
    const double s = 0.1 + 5.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    std::vector<Correspondence> corr, scaled;
    for (const auto& p : random_points(rng, 40, 400, 400)) {
      auto q = h.apply(p);
      q.x += noise(rng);
      q.y += noise(rng);
      corr.push_back({p, q});
      scaled.push_back({s * p, s * q});
    }
    const auto h1 = fit_homography_dlt(corr);
    const auto h2 = fit_homography_dlt(scaled);
    Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
    S(0, 0) = S(1, 1) = s;
    const Homography conj(S.inverse() * h2.matrix() * S);
    EXPECT_LE(max_element_diff(conj, h1), 1e-6) << "scale " << s;
  }
}

TEST(Atlas, SingleCameraIsIdentity) {
  const auto atlas = build_atlas(MatchSet{}, 1, 0);
  ASSERT_EQ(atlas.camera_count(), 1);
  EXPECT_TRUE(atlas.to_reference[0].is_identity());
}

TEST(Atlas, MissingCameraIsNamed) {
  std::mt19937_64 rng(7);
  MatchSet set;
  std::vector<Homography> truth{Homography{}};
  for (int c = 1; c < 5; ++c) truth.push_back(random_homography(rng));
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      auto& list = set.pairs[{a, b}];
      const auto hab = truth[b].inverse() * truth[a];
      for (const auto& p : random_points(rng, 40, 400, 400)) list.push_back({p, hab.apply(p)});
    }
  }
  try {
    build_atlas(set, 5, 0);
    FAIL() << "expected CalibrationFailed";
  } catch (const CalibrationFailed& e) {
    EXPECT_EQ(e.camera, 4);
  }
}

TEST(Atlas, ChainsThroughAnIntermediate) {
  std::mt19937_64 rng(9);
  std::vector<Homography> truth{Homography{}, random_homography(rng), random_homography(rng)};
  MatchSet set;
  auto add = [&](int a, int b) {
    const auto hab = truth[b].inverse() * truth[a];
    for (const auto& p : random_points(rng, 40, 400, 400)) set.pairs[{a, b}].push_back({p, hab.apply(p)});
  };
  add(0, 1);
  add(1, 2);  // camera 2 never sees the reference directly
  const auto atlas = build_atlas(set, 3, 0, {"r", "x", "y"});
  EXPECT_EQ(atlas.routes[2], "via x");
  EXPECT_LE(max_element_diff(atlas.to_reference[2], truth[2]), 1e-6);
  EXPECT_LE(max_element_diff(atlas.between(2, 1), truth[1].inverse() * truth[2]), 1e-6);
}

TEST(Atlas, PentagonRigMatchesGroundTruth) {
  auto scenario = preset_scenario("static", 320, 240, 30);
  SyntheticRig rig(scenario, 3);
  const auto matches = accumulate_matches(rig, {1, 30}, 5);
  const auto atlas = build_atlas(matches, 5, 0, rig.camera_ids());
  const auto truth = rig.true_atlas(1);
  for (int c = 1; c < 5; ++c) {
    double sum = 0;
    int n = 0;
    for (int y = 20; y < 240; y += 20) {
      for (int x = 20; x < 320; x += 20) {
        sum += norm(atlas.to_reference[c].apply({double(x), double(y)}) -
                    truth[c].apply({double(x), double(y)}));
        ++n;
      }
    }
    EXPECT_LE(sum / n, 1.0) << "camera " << c;
  }
}

TEST(Warp, IdentityIsExact) {
  const auto img = textured_image({90, 70}, 1);
  const auto w = warp(img, Homography{}, img.size());
  EXPECT_TRUE(identical(w.image, img));
  EXPECT_EQ(cv::countNonZero(w.valid), img.size().area());
}

TEST(Warp, TranslationOnDoubleCanvas) {
  const auto img = textured_image({80, 60}, 2);
  const auto canvas = DoubleCanvas::around(img.size());
  const auto w = warp(img, Homography::translation(10, 10), canvas.size, canvas.origin);
  // Crop back to the reference window [0,W)x[0,H).
  const cv::Rect window(static_cast<int>(-canvas.origin.x), static_cast<int>(-canvas.origin.y), 80, 60);
  const Image crop = w.image(window);
  const Mask valid = w.valid(window);
  EXPECT_TRUE(identical(crop(cv::Rect(10, 10, 70, 50)), img(cv::Rect(0, 0, 70, 50))));
  EXPECT_EQ(cv::countNonZero(valid(cv::Rect(0, 0, 80, 10))), 0);
  EXPECT_EQ(cv::countNonZero(valid(cv::Rect(0, 0, 10, 60))), 0);
  EXPECT_EQ(cv::countNonZero(valid(cv::Rect(10, 10, 70, 50))), 70 * 50);
}

TEST(Warp, PerspectiveRoundTrip) {
  Image img = textured_image({160, 120}, 3);
  cv::GaussianBlur(img, img, cv::Size(0, 0), 1.5);
  std::mt19937_64 rng(10);
  const auto h = random_homography(rng, 160, 0.5);
  const auto fwd = warp(img, h, img.size());
  const auto back = warp(fwd.image, h.inverse(), img.size());
  // Jointly valid: pixels whose whole bilinear footprint came from valid fwd pixels.
  Image fwd_valid3;
  cv::cvtColor(fwd.valid, fwd_valid3, cv::COLOR_GRAY2BGR);
  const auto carried = warp(fwd_valid3, h.inverse(), img.size());
  Mask both;
  cv::inRange(carried.image, cv::Scalar::all(255), cv::Scalar::all(255), both);
  cv::bitwise_and(both, back.valid, both);
  cv::erode(both, both, cv::Mat::ones(3, 3, CV_8U));
  ASSERT_GT(cv::countNonZero(both), img.size().area() / 3);
  EXPECT_GE(psnr_oracle(back.image, img, both), 35.0);
}

// Property: rotations and translations keep total intensity (whole image on canvas).
TEST(Warp, PropertyAreaPreservingMapsKeepIntensity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  Image img = textured_image({80, 60}, 4);
  cv::GaussianBlur(img, img, cv::Size(0, 0), 1.0);
  const auto canvas = DoubleCanvas::around(img.size());
  const double total = cv::sum(img)[0] + cv::sum(img)[1] + cv::sum(img)[2];
  for (int trial = 0; trial < 10; ++trial) {
    const double a = 0.5 * u(rng);
    Eigen::Matrix3d m;
    m << std::cos(a), -std::sin(a), 40 + 10 * u(rng), std::sin(a), std::cos(a), 30 + 10 * u(rng), 0, 0, 1;
    const Homography centred = Homography(m) * Homography::translation(-40, -30);
    const auto w = warp(img, centred, canvas.size, canvas.origin);
    // The valid region drops the half-pixel source border, so compare per unit area.
    const auto s = cv::sum(w.image);
    const double expected = total * cv::countNonZero(w.valid) / double(img.size().area());
    EXPECT_NEAR(s[0] + s[1] + s[2], expected, 0.02 * expected);
  }
}

TEST(ApplyAtlas, ReferenceUnchangedAndStaleAtlasStillRuns) {
  std::mt19937_64 rng(12);
  const auto ref = textured_image({64, 48}, 5);
  FrameStack stack{1, {ref, textured_image({64, 48}, 6)}};
  const auto aligned = apply_atlas(stack, atlas_from({Homography{}, random_homography(rng, 64)}));
  EXPECT_TRUE(identical(aligned.images[0], ref));
  EXPECT_EQ(aligned.images[1].size(), ref.size());
}

TEST(ApplyAtlas, SyntheticRigViewsOverlapReference) {
  auto scenario = preset_scenario("static", 320, 240, 2);
  SyntheticRig rig(scenario, 5);
  const auto aligned = apply_atlas(rig.stack(1), atlas_from(rig.true_atlas(1)));
  for (int c = 1; c < 5; ++c) {
    cv::Mat diff;
    cv::absdiff(aligned.images[c], aligned.images[0], diff);
    const double mad = cv::mean(diff, aligned.valid[c])[0] / 3 + cv::mean(diff, aligned.valid[c])[1] / 3 +
                       cv::mean(diff, aligned.valid[c])[2] / 3;
    EXPECT_LE(mad, 5.0) << "camera " << c;
  }
}

TEST(AtlasIo, RoundTrip) {
  TempDir dir("atlas_io");
  std::mt19937_64 rng(13);
  auto atlas = atlas_from({Homography{}, random_homography(rng), random_homography(rng)});
  atlas.camera_ids = {"a", "b", "c"};
  atlas.routes = {"reference", "direct", "via b"};
  atlas.segment_id = 2;
  atlas.calibration_frame = 77;
  write_atlas(atlas, dir / "a.json");
  const auto back = read_atlas(dir / "a.json");
  EXPECT_EQ(back.segment_id, 2);
  EXPECT_EQ(back.calibration_frame, 77);
  EXPECT_EQ(back.routes, atlas.routes);
  for (int c = 0; c < 3; ++c) EXPECT_LE(max_element_diff(back.to_reference[c], atlas.to_reference[c]), 1e-12);
}

#include "mcview/synthgen.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace mcview {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Eigen::Matrix3d rotation_x(double a) {
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return r;
}
Eigen::Matrix3d rotation_y(double a) {
  Eigen::Matrix3d r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return r;
}
Eigen::Matrix3d rotation_z(double a) {
  Eigen::Matrix3d r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

double focal_length(const Scenario& s) {
  const double dist = std::hypot(s.rig_radius_mm, s.focus_mm);
  return s.field_fraction * s.width * dist / (2.0 * s.field_radius_mm);
}

// Plane z=0 (mm) -> image of camera c.
Eigen::Matrix3d projection(const Scenario& s, int camera, const RigPose& pose) {
  const Eigen::Matrix3d rig = rotation_z(pose.yaw_deg * kDeg) * rotation_y(pose.tilt_y_deg * kDeg) *
                              rotation_x(pose.tilt_x_deg * kDeg);
  const Eigen::Vector3d centre(pose.x_mm, pose.y_mm, pose.height_mm);
  const double phi = 2.0 * std::numbers::pi * camera / s.camera_count;
  const Eigen::Vector3d radial(std::cos(phi), std::sin(phi), 0.0);
  const Eigen::Vector3d position = centre + rig * (s.rig_radius_mm * radial);
  const Eigen::Vector3d focus = centre + rig * Eigen::Vector3d(0, 0, -s.focus_mm);

  const Eigen::Vector3d z = (focus - position).normalized();
  const Eigen::Vector3d outward = rig * radial;
  const Eigen::Vector3d y = (outward - outward.dot(z) * z).normalized();
  const Eigen::Vector3d x = y.cross(z);
  Eigen::Matrix3d r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  const Eigen::Vector3d t = -r * position;

  const double f = focal_length(s);
  Eigen::Matrix3d k;
  k << f, 0, (s.width - 1) / 2.0, 0, f, (s.height - 1) / 2.0, 0, 0, 1;
  Eigen::Matrix3d rt;
  rt.col(0) = r.col(0);
  rt.col(1) = r.col(1);
  rt.col(2) = t;
  return k * rt;
}

std::vector<Vec2> field_polygon_mm(const Scenario& s) {
  std::vector<Vec2> poly;
  constexpr int kPoints = 180;
  for (int i = 0; i < kPoints; ++i) {
    const double th = 2.0 * std::numbers::pi * i / kPoints;
    const double r = s.field_radius_mm * (1.0 + 0.06 * std::sin(3.0 * th + 0.7));
    poly.push_back({r * std::cos(th), r * std::sin(th)});
  }
  return poly;
}

Mask rasterise_polygon(const std::vector<Vec2>& poly, const Homography& h, cv::Size size,
                       Vec2 offset = {}) {
  std::vector<cv::Point> pts;
  constexpr int kShift = 4;  // sub-pixel vertices
  for (const auto& p : poly) {
    const auto q = h.apply(p) + offset;
    pts.emplace_back(static_cast<int>(std::lround(q.x * (1 << kShift))),
                     static_cast<int>(std::lround(q.y * (1 << kShift))));
  }
  Mask m(size, CV_8UC1, cv::Scalar(0));
  cv::fillPoly(m, std::vector<std::vector<cv::Point>>{pts}, cv::Scalar(255), cv::LINE_8, kShift);
  return m;
}

Mask camera_field_label(const Scenario& s, int camera, const RigPose& pose) {
  return rasterise_polygon(field_polygon_mm(s), Homography(projection(s, camera, pose)),
                           {s.width, s.height});
}

Vec2 occluder_centre(const Occluder& o, int t) {
  if (o.last <= o.first) return o.from;
  const double a = static_cast<double>(t - o.first) / (o.last - o.first);
  return o.from + a * (o.to - o.from);
}

std::size_t covered_pixels(const Mask& field, Vec2 centre, double radius) {
  std::size_t n = 0;
  const int y0 = std::max(0, static_cast<int>(std::floor(centre.y - radius)));
  const int y1 = std::min(field.rows - 1, static_cast<int>(std::ceil(centre.y + radius)));
  const int x0 = std::max(0, static_cast<int>(std::floor(centre.x - radius)));
  const int x1 = std::min(field.cols - 1, static_cast<int>(std::ceil(centre.x + radius)));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y) {
    const auto* row = field.ptr<std::uint8_t>(y);
    for (int x = x0; x <= x1; ++x) {
      if (row[x] && (x - centre.x) * (x - centre.x) + (y - centre.y) * (y - centre.y) <= r2) ++n;
    }
  }
  return n;
}

cv::Scalar hsv_colour(double hue, double sat, double val) {
  const auto rgb = to_rgb(Hsv{hue, static_cast<int>(sat), static_cast<int>(val)});
  return cv::Scalar(rgb.b, rgb.g, rgb.r);
}

// Procedural layer of overlapping anti-aliased shapes.
Image shape_layer(cv::Size size, double scale, std::mt19937_64& rng, double hue_lo,
                  double hue_hi, double sat_lo, double sat_hi, double val_lo, double val_hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  Image layer(size, CV_8UC3,
              hsv_colour((hue_lo + hue_hi) / 2, (sat_lo + sat_hi) / 2, (val_lo + val_hi) / 2));
  const auto count = static_cast<int>(size.area() / (300.0 * scale * scale));
  constexpr int kShift = 4;
  auto fixed = [](double v) { return static_cast<int>(std::lround(v * (1 << kShift))); };
  for (int i = 0; i < count; ++i) {
    const auto colour =
        hsv_colour(between(hue_lo, hue_hi), between(sat_lo, sat_hi), between(val_lo, val_hi));
    const double cx = between(0, size.width);
    const double cy = between(0, size.height);
    const double r = scale * between(3.0, 14.0);
    const int kind = static_cast<int>(u(rng) * 3);
    if (kind == 0) {
      std::vector<cv::Point> tri;
      for (int k = 0; k < 3; ++k) {
        const double a = between(0, 2 * std::numbers::pi);
        const double rr = r * between(0.5, 1.0);
        tri.emplace_back(fixed(cx + rr * std::cos(a)), fixed(cy + rr * std::sin(a)));
      }
      cv::fillConvexPoly(layer, tri, colour, cv::LINE_AA, kShift);
    } else if (kind == 1) {
      const double a = between(0, std::numbers::pi);
      const double w = r * between(0.4, 1.0), h = r * between(0.3, 1.0);
      std::vector<cv::Point> quad;
      for (auto [sx, sy] : {std::pair{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}) {
        const double px = sx * w, py = sy * h;
        quad.emplace_back(fixed(cx + px * std::cos(a) - py * std::sin(a)),
                          fixed(cy + px * std::sin(a) + py * std::cos(a)));
      }
      cv::fillConvexPoly(layer, quad, colour, cv::LINE_AA, kShift);
    } else {
      cv::ellipse(layer, cv::Point(fixed(cx), fixed(cy)),
                  cv::Size(fixed(r * between(0.3, 1.0)), fixed(r * between(0.2, 0.6))),
                  between(0, 180), 0, 360, colour, cv::FILLED, cv::LINE_AA, kShift);
    }
  }
  return layer;
}

// Approximately N(0,1) deviates from a counter-based hash (Irwin-Hall, 4 terms).
inline double hashed_normal(std::uint64_t key, std::uint64_t index, int lane) {
  const std::uint64_t h = mix_seed(key, index * 4 + static_cast<std::uint64_t>(lane));
  double s = 0;
  for (int k = 0; k < 4; ++k) s += static_cast<double>((h >> (16 * k)) & 0xffff) / 65536.0;
  return (s - 2.0) * std::sqrt(3.0);
}

}  // namespace

// --- scenario ------------------------------------------------------------------

void Scenario::validate() const {
  if (width < 32 || height < 32) throw PreconditionError("scenario frames too small");
  if (camera_count < 1) throw PreconditionError("scenario needs cameras");
  if (reference < 0 || reference >= camera_count) throw PreconditionError("bad reference camera");
  if (duration < 1 || !(fps > 0)) throw PreconditionError("bad scenario duration or fps");
  int prev = 0;
  for (const auto& m : rig_moves) {
    if (m.frame < prev || m.frame < 1 || m.frame > duration) {
      throw PreconditionError("rig moves must be sorted and within the duration");
    }
    if (m.duration_frames < 1) throw PreconditionError("rig move duration must be >= 1");
    prev = m.frame;
  }
  for (const auto& o : occluders) {
    if (o.camera < 0 || o.camera >= camera_count || o.first > o.last || o.radius < 0) {
      throw PreconditionError("invalid occluder");
    }
  }
}

RigPose Scenario::pose_at(int t) const {
  RigPose current = initial_pose;
  for (const auto& m : rig_moves) {
    if (t <= m.frame) break;
    const double s = static_cast<double>(t - m.frame) / m.duration_frames;
    if (s >= 1.0) {
      current = m.pose;
      continue;
    }
    const double w = s * s * (3 - 2 * s);
    auto mix = [w](double a, double b) { return a + w * (b - a); };
    current = {mix(current.x_mm, m.pose.x_mm),         mix(current.y_mm, m.pose.y_mm),
               mix(current.height_mm, m.pose.height_mm), mix(current.yaw_deg, m.pose.yaw_deg),
               mix(current.tilt_x_deg, m.pose.tilt_x_deg), mix(current.tilt_y_deg, m.pose.tilt_y_deg)};
    break;
  }
  return current;
}

// --- renderer ------------------------------------------------------------------

SyntheticRig::SyntheticRig(Scenario scenario, std::uint64_t seed)
    : scenario_(std::move(scenario)), seed_(seed) {
  scenario_.validate();
  for (int c = 0; c < scenario_.camera_count; ++c) ids_.push_back("cam" + std::to_string(c + 1));
  plane_to_texture_ = plane_to_image(scenario_.reference, scenario_.initial_pose);

  const int w = scenario_.width, h = scenario_.height;
  const cv::Size tex_size(3 * w, 3 * h);
  const double scale = w / 320.0;
  std::mt19937_64 rng(mix_seed(seed, 0x7e57));
  const Image drapes = shape_layer(tex_size, scale, rng, 92, 108, 60, 200, 60, 230);
  const Image field = shape_layer(tex_size, scale, rng, 2, 26, 90, 230, 70, 245);
  field_texture_ = rasterise_polygon(field_polygon_mm(scenario_), plane_to_texture_, tex_size,
                                     Vec2{static_cast<double>(w), static_cast<double>(h)});
  texture_ = drapes.clone();
  field.copyTo(texture_, field_texture_);
  cv::GaussianBlur(texture_, texture_, cv::Size(0, 0), 0.7 * scale);
}

Homography SyntheticRig::plane_to_image(int camera, const RigPose& pose) const {
  return Homography(projection(scenario_, camera, pose));
}

Homography SyntheticRig::true_to_reference(int camera, int t) const {
  const auto pose = scenario_.pose_at(t);
  return plane_to_image(scenario_.reference, pose) * plane_to_image(camera, pose).inverse();
}

std::vector<Homography> SyntheticRig::true_atlas(int t) const {
  std::vector<Homography> out;
  for (int c = 0; c < scenario_.camera_count; ++c) out.push_back(true_to_reference(c, t));
  return out;
}

Image SyntheticRig::image(int camera, int t) const {
  if (camera < 0 || camera >= scenario_.camera_count || t < 1 || t > scenario_.duration) {
    throw PreconditionError("synthetic frame request out of range");
  }
  return render(camera, t, true);
}

Image SyntheticRig::texture_view() const {
  const int w = scenario_.width, h = scenario_.height;
  return texture_(cv::Rect(w, h, w, h)).clone();
}

Image SyntheticRig::render(int camera, int t, bool with_noise) const {
  const int w = scenario_.width, h = scenario_.height;
  const auto pose = scenario_.pose_at(t);
  const Homography image_to_texture =
      plane_to_texture_ * plane_to_image(camera, pose).inverse();
  const Eigen::Matrix3d m = image_to_texture.matrix();

  Image out(h, w, CV_8UC3);
  const cv::Vec3b outside = texture_.at<cv::Vec3b>(0, 0);
  for (int y = 0; y < h; ++y) {
    auto* dst = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      const double d = m(2, 0) * x + m(2, 1) * y + m(2, 2);
      const double tx = (m(0, 0) * x + m(0, 1) * y + m(0, 2)) / d + w;
      const double ty = (m(1, 0) * x + m(1, 1) * y + m(1, 2)) / d + h;
      if (!(tx >= 0 && ty >= 0 && tx < texture_.cols - 1 && ty < texture_.rows - 1)) {
        dst[x] = outside;
        continue;
      }
      const int x0 = static_cast<int>(tx), y0 = static_cast<int>(ty);
      const double fx = tx - x0, fy = ty - y0;
      const auto* r0 = texture_.ptr<cv::Vec3b>(y0);
      const auto* r1 = texture_.ptr<cv::Vec3b>(y0 + 1);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = r0[x0][ch] + fx * (r0[x0 + 1][ch] - r0[x0][ch]);
        const double bottom = r1[x0][ch] + fx * (r1[x0 + 1][ch] - r1[x0][ch]);
        dst[x][ch] = static_cast<std::uint8_t>(top + fy * (bottom - top) + 0.5);
      }
    }
  }

  for (const auto& o : scenario_.occluders) {
    if (o.camera != camera || t < o.first || t > o.last || o.radius <= 0) continue;
    const Vec2 c = occluder_centre(o, t);
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y - o.radius)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y + o.radius)));
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x - o.radius)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x + o.radius)));
    for (int y = y0; y <= y1; ++y) {
      auto* dst = out.ptr<cv::Vec3b>(y);
      for (int x = x0; x <= x1; ++x) {
        const double rho2 = ((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y)) / (o.radius * o.radius);
        if (rho2 > 1.0) continue;
        const auto rgb = to_rgb(Hsv{static_cast<double>(o.hue), 140,
                                    static_cast<int>(std::lround(100 + 40 * (1 - rho2)))});
        dst[x] = cv::Vec3b(static_cast<std::uint8_t>(rgb.b), static_cast<std::uint8_t>(rgb.g),
                           static_cast<std::uint8_t>(rgb.r));
      }
    }
  }

  if (with_noise && scenario_.noise_sigma > 0) {
    const std::uint64_t key =
        mix_seed(mix_seed(seed_, static_cast<std::uint64_t>(t)), static_cast<std::uint64_t>(camera));
    for (int y = 0; y < h; ++y) {
      auto* dst = out.ptr<cv::Vec3b>(y);
      for (int x = 0; x < w; ++x) {
        const auto index = static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(w) +
                           static_cast<std::uint64_t>(x);
        for (int ch = 0; ch < 3; ++ch) {
          const double v = dst[x][ch] + scenario_.noise_sigma * hashed_normal(key, index, ch);
          dst[x][ch] = static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::floor(v + 0.5)), 0, 255));
        }
      }
    }
  }
  return out;
}

Mask SyntheticRig::field_label(int camera, int t) const {
  return camera_field_label(scenario_, camera, scenario_.pose_at(t));
}

double SyntheticRig::occlusion_fraction(int camera, int t) const {
  const Mask field = field_label(camera, t);
  const auto total = static_cast<std::size_t>(cv::countNonZero(field));
  if (total == 0) return 0.0;
  Mask hidden(field.size(), CV_8UC1, cv::Scalar(0));
  for (const auto& o : scenario_.occluders) {
    if (o.camera != camera || t < o.first || t > o.last || o.radius <= 0) continue;
    const auto c = occluder_centre(o, t);
    cv::circle(hidden, cv::Point(static_cast<int>(std::lround(c.x)), static_cast<int>(std::lround(c.y))),
               static_cast<int>(std::lround(o.radius)), cv::Scalar(255), cv::FILLED);
  }
  cv::bitwise_and(hidden, field, hidden);
  return static_cast<double>(cv::countNonZero(hidden)) / static_cast<double>(total);
}

GroundTruth SyntheticRig::ground_truth(bool with_occlusion) const {
  GroundTruth truth;
  int start = 1;
  for (const auto& m : scenario_.rig_moves) {
    truth.movements.push_back(m.frame);
    if (m.frame >= start) {
      truth.segments.push_back({start, m.frame, true_atlas(start)});
    }
    start = m.frame + m.duration_frames;
  }
  if (start <= scenario_.duration) {
    truth.segments.push_back({start, scenario_.duration, true_atlas(start)});
  }
  if (with_occlusion) {
    truth.occlusion.resize(static_cast<std::size_t>(scenario_.duration));
    for (int t = 1; t <= scenario_.duration; ++t) {
      auto& row = truth.occlusion[static_cast<std::size_t>(t - 1)];
      for (int c = 0; c < scenario_.camera_count; ++c) row.push_back(occlusion_fraction(c, t));
    }
  }
  return truth;
}

// --- scenario editing ------------------------------------------------------------

Scenario inject_occluder(const Scenario& scenario, int camera, double coverage,
                         FrameRange interval) {
  if (coverage < 0.0 || coverage > 1.0) throw PreconditionError("coverage must lie in [0, 1]");
  if (camera < 0 || camera >= scenario.camera_count) throw PreconditionError("bad occluder camera");
  Scenario out = scenario;
  if (coverage == 0.0) return out;

  const Mask field = camera_field_label(scenario, camera, scenario.pose_at(interval.first));
  const auto total = static_cast<double>(cv::countNonZero(field));
  if (total == 0) throw PreconditionError("camera does not see the field");
  const auto mom = cv::moments(field, true);
  const Vec2 centre{mom.m10 / mom.m00, mom.m01 / mom.m00};

  double lo = 0.0, hi = std::hypot(scenario.width, scenario.height);
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (static_cast<double>(covered_pixels(field, centre, mid)) / total >= coverage) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.occluders.push_back({camera, interval.first, interval.last, centre, centre, hi, 100});
  return out;
}

Scenario add_lamp_move(const Scenario& scenario, int frame, const RigPose& pose,
                       int duration_frames, const std::vector<int>& arm_cameras, int lead,
                       int trail, double arm_coverage) {
  Scenario out = scenario;
  out.rig_moves.push_back({frame, duration_frames, pose});
  std::stable_sort(out.rig_moves.begin(), out.rig_moves.end(),
                   [](const RigMove& a, const RigMove& b) { return a.frame < b.frame; });
  const int first = std::max(1, frame - lead);
  const int last = std::min(out.duration, frame + duration_frames + trail);
  for (int c : arm_cameras) {
    // Arms in front of the lens: sized on the pose the lamp leaves from, and
    // again on the pose it arrives at.
    out = inject_occluder(out, c, arm_coverage, {first, frame + duration_frames / 2});
    out = inject_occluder(out, c, arm_coverage, {frame + duration_frames / 2 + 1, last});
  }
  return out;
}

// --- disk output -----------------------------------------------------------------

namespace {

json pose_json(const RigPose& p) {
  return {{"x_mm", p.x_mm},          {"y_mm", p.y_mm},
          {"height_mm", p.height_mm}, {"yaw_deg", p.yaw_deg},
          {"tilt_x_deg", p.tilt_x_deg}, {"tilt_y_deg", p.tilt_y_deg}};
}

RigPose pose_from(const json& j) {
  RigPose p;
  p.x_mm = j.value("x_mm", 0.0);
  p.y_mm = j.value("y_mm", 0.0);
  p.height_mm = j.value("height_mm", 1000.0);
  p.yaw_deg = j.value("yaw_deg", 0.0);
  p.tilt_x_deg = j.value("tilt_x_deg", 0.0);
  p.tilt_y_deg = j.value("tilt_y_deg", 0.0);
  return p;
}

std::vector<double> matrix_entries(const Homography& h) {
  std::vector<double> e;
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) e.push_back(h.matrix()(r, k));
  }
  return e;
}

}  // namespace

void write_ground_truth(const GroundTruth& truth, const std::vector<std::string>& ids,
                        const fs::path& path) {
  json doc;
  doc["movements"] = truth.movements;
  doc["segments"] = json::array();
  for (const auto& s : truth.segments) {
    json cams = json::object();
    for (std::size_t c = 0; c < s.to_reference.size(); ++c) {
      cams[ids.at(c)] = matrix_entries(s.to_reference[c]);
    }
    doc["segments"].push_back({{"first", s.first}, {"last", s.last}, {"to_reference", cams}});
  }
  doc["occlusion"] = json::array();
  for (const auto& row : truth.occlusion) {
    json r = json::array();
    for (double v : row) r.push_back(std::round(v * 1e4) / 1e4);
    doc["occlusion"].push_back(r);
  }
  doc["camera_ids"] = ids;
  std::ofstream out(path);
  if (!out) throw Error("cannot write ground truth " + path.string());
  out << doc.dump(1) << '\n';
}

GroundTruth read_ground_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ground truth " + path.string());
  const auto doc = json::parse(in);
  GroundTruth truth;
  truth.movements = doc.at("movements").get<std::vector<int>>();
  const auto ids = doc.at("camera_ids").get<std::vector<std::string>>();
  for (const auto& s : doc.at("segments")) {
    TruthSegment seg;
    seg.first = s.at("first").get<int>();
    seg.last = s.at("last").get<int>();
    for (const auto& id : ids) {
      const auto e = s.at("to_reference").at(id).get<std::vector<double>>();
      Eigen::Matrix3d m;
      m << e[0], e[1], e[2], e[3], e[4], e[5], e[6], e[7], e[8];
      seg.to_reference.emplace_back(m);
    }
    truth.segments.push_back(std::move(seg));
  }
  truth.occlusion = doc.at("occlusion").get<std::vector<std::vector<double>>>();
  return truth;
}

void write_scenario(const Scenario& s, const fs::path& path) {
  json doc;
  doc["width"] = s.width;
  doc["height"] = s.height;
  doc["camera_count"] = s.camera_count;
  doc["reference"] = s.reference;
  doc["duration"] = s.duration;
  doc["fps"] = s.fps;
  doc["noise_sigma"] = s.noise_sigma;
  doc["rig_radius_mm"] = s.rig_radius_mm;
  doc["focus_mm"] = s.focus_mm;
  doc["field_radius_mm"] = s.field_radius_mm;
  doc["field_fraction"] = s.field_fraction;
  doc["initial_pose"] = pose_json(s.initial_pose);
  doc["rig_moves"] = json::array();
  for (const auto& m : s.rig_moves) {
    doc["rig_moves"].push_back(
        {{"frame", m.frame}, {"duration_frames", m.duration_frames}, {"pose", pose_json(m.pose)}});
  }
  doc["occluders"] = json::array();
  for (const auto& o : s.occluders) {
    doc["occluders"].push_back({{"camera", o.camera},
                                {"first", o.first},
                                {"last", o.last},
                                {"from", {o.from.x, o.from.y}},
                                {"to", {o.to.x, o.to.y}},
                                {"radius", o.radius},
                                {"hue", o.hue}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write scenario " + path.string());
  out << doc.dump(2) << '\n';
}

Scenario read_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario " + path.string());
  const auto doc = json::parse(in);
  Scenario s;
  s.width = doc.value("width", s.width);
  s.height = doc.value("height", s.height);
  s.camera_count = doc.value("camera_count", s.camera_count);
  s.reference = doc.value("reference", s.reference);
  s.duration = doc.value("duration", s.duration);
  s.fps = doc.value("fps", s.fps);
  s.noise_sigma = doc.value("noise_sigma", s.noise_sigma);
  s.rig_radius_mm = doc.value("rig_radius_mm", s.rig_radius_mm);
  s.focus_mm = doc.value("focus_mm", s.focus_mm);
  s.field_radius_mm = doc.value("field_radius_mm", s.field_radius_mm);
  s.field_fraction = doc.value("field_fraction", s.field_fraction);
  if (doc.contains("initial_pose")) s.initial_pose = pose_from(doc["initial_pose"]);
  for (const auto& m : doc.value("rig_moves", json::array())) {
    s.rig_moves.push_back({m.at("frame").get<int>(), m.value("duration_frames", 1),
                           pose_from(m.at("pose"))});
  }
  for (const auto& o : doc.value("occluders", json::array())) {
    const auto from = o.at("from").get<std::vector<double>>();
    const auto to = o.value("to", from);
    s.occluders.push_back({o.at("camera").get<int>(), o.at("first").get<int>(),
                           o.at("last").get<int>(), Vec2{from.at(0), from.at(1)},
                           Vec2{to.at(0), to.at(1)}, o.at("radius").get<double>(),
                           o.value("hue", 100)});
  }
  s.validate();
  return s;
}

RenderedScenario render(const Scenario& scenario, std::uint64_t seed, const fs::path& out_dir,
                        int threads) {
  const SyntheticRig rig(scenario, seed);
  fs::create_directories(out_dir);

  Manifest manifest;
  manifest.camera_ids = rig.camera_ids();
  manifest.fps = scenario.fps;
  manifest.reference_camera = rig.camera_ids().at(static_cast<std::size_t>(scenario.reference));
  manifest.frame_count = scenario.duration;
  for (const auto& id : rig.camera_ids()) {
    manifest.frame_dirs.push_back(out_dir / id);
    fs::create_directories(out_dir / id);
  }

  const std::vector<int> png{cv::IMWRITE_PNG_COMPRESSION, 1};
  const auto cams = static_cast<std::size_t>(scenario.camera_count);
  parallel_for(static_cast<std::size_t>(scenario.duration) * cams, threads, [&](std::size_t k) {
    const int t = static_cast<int>(k / cams) + 1;
    const int c = static_cast<int>(k % cams);
    const auto path = manifest.frame_path(c, t);
    if (!cv::imwrite(path.string(), rig.image(c, t), png)) {
      throw Error("failed to write " + path.string());
    }
  });

  RenderedScenario out{out_dir / "manifest.json", out_dir / "ground_truth.json"};
  save_manifest(manifest, out.manifest);
  write_ground_truth(rig.ground_truth(true), rig.camera_ids(), out.ground_truth);
  write_scenario(scenario, out_dir / "scenario.json");
  return out;
}

Scenario preset_scenario(const std::string& name, int width, int height, int frames) {
  Scenario s;
  s.width = width;
  s.height = height;
  s.duration = frames;
  if (name == "static") return s;

  if (name == "offcenter" || name == "switching") {
    if (name == "offcenter") {
      s.initial_pose.x_mm = 45.0;
      s.initial_pose.y_mm = -25.0;
    }
    // Surgeons' heads: each camera in turn is partly hidden so the least
    // occluded view keeps changing.
    const int block = name == "switching" ? 60 : 45;
    for (int start = 1, k = 0; start <= frames; start += block, ++k) {
      const int end = std::min(frames, start + block - 1);
      for (int c = 0; c < s.camera_count; ++c) {
        const double coverage = (k % s.camera_count) == c ? 0.08 : 0.3;
        s = inject_occluder(s, c, coverage, {start, end});
      }
    }
    return s;
  }
  if (name == "moving") {
    RigPose to;
    to.x_mm = 30;
    to.height_mm = 930;
    to.tilt_x_deg = 6;
    to.yaw_deg = 10;
    return add_lamp_move(s, std::max(2, frames * 2 / 5), to, static_cast<int>(s.fps), {1, 3},
                         static_cast<int>(s.fps), static_cast<int>(s.fps));
  }
  throw PreconditionError("unknown scenario preset '" + name + "'");
}

}  // namespace mcview

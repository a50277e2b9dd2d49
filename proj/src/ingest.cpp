#include "mcview/ingest.hpp"

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cmath>
#include <fstream>
#include <regex>
#include <set>

namespace mcview {

namespace fs = std::filesystem;
using nlohmann::json;

int Manifest::reference_index() const {
  const auto it = std::find(camera_ids.begin(), camera_ids.end(), reference_camera);
  if (it == camera_ids.end()) throw Error("unknown reference camera '" + reference_camera + "'");
  return static_cast<int>(it - camera_ids.begin());
}

fs::path Manifest::frame_path(int camera, int t) const {
  char name[32];
  std::snprintf(name, sizeof(name), "%06d.png", t);
  return frame_dirs.at(static_cast<std::size_t>(camera)) / name;
}

namespace {

// Frame indices present in a camera directory, from files named NNNNNN.png.
std::set<int> list_frame_indices(const fs::path& dir) {
  static const std::regex pattern(R"((\d{6})\.png)");
  std::set<int> indices;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) indices.insert(std::stoi(m[1].str()));
  }
  return indices;
}

}  // namespace

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());

  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error("malformed manifest " + path.string() + ": " + e.what());
  }

  Manifest m;
  try {
    const auto base = path.parent_path();
    for (const auto& cam : doc.at("cameras")) {
      m.camera_ids.push_back(cam.at("id").get<std::string>());
      fs::path dir = cam.at("dir").get<std::string>();
      m.frame_dirs.push_back(dir.is_absolute() ? dir : base / dir);
    }
    m.fps = doc.value("fps", 30.0);
    m.reference_camera = doc.at("reference").get<std::string>();
    m.frame_count = doc.at("frames").get<int>();
  } catch (const json::exception& e) {
    throw Error("malformed manifest " + path.string() + ": " + e.what());
  }

  if (m.camera_count() < 2) throw Error("manifest needs at least 2 cameras");
  if (!(m.fps > 0.0)) throw Error("manifest fps must be positive");
  if (m.frame_count <= 0) throw Error("manifest frame count must be positive");
  if (std::find(m.camera_ids.begin(), m.camera_ids.end(), m.reference_camera) ==
      m.camera_ids.end()) {
    throw Error("unknown reference camera '" + m.reference_camera + "'");
  }

  for (int c = 0; c < m.camera_count(); ++c) {
    const auto& id = m.camera_ids[static_cast<std::size_t>(c)];
    const auto& dir = m.frame_dirs[static_cast<std::size_t>(c)];
    if (!fs::is_directory(dir)) {
      throw Error("missing directory for camera " + id + ": " + dir.string());
    }
    const auto indices = list_frame_indices(dir);
    const bool contiguous = !indices.empty() && *indices.begin() == 1 &&
                            *indices.rbegin() == static_cast<int>(indices.size());
    if (static_cast<int>(indices.size()) != m.frame_count || !contiguous) {
      throw Error("frame count mismatch for camera " + id + ": expected " +
                  std::to_string(m.frame_count) + ", found " +
                  std::to_string(indices.size()));
    }
  }
  return m;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  json doc;
  doc["cameras"] = json::array();
  const auto base = path.parent_path();
  for (int c = 0; c < manifest.camera_count(); ++c) {
    const auto& dir = manifest.frame_dirs[static_cast<std::size_t>(c)];
    std::error_code ec;
    auto rel = fs::relative(dir, base.empty() ? fs::path(".") : base, ec);
    doc["cameras"].push_back({{"id", manifest.camera_ids[static_cast<std::size_t>(c)]},
                              {"dir", (ec || rel.empty() ? dir : rel).generic_string()}});
  }
  doc["fps"] = manifest.fps;
  doc["reference"] = manifest.reference_camera;
  doc["frames"] = manifest.frame_count;
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

FrameStack FrameSource::stack(int t, int threads) const {
  if (t < 1 || t > frame_count()) {
    throw PreconditionError("frame index " + std::to_string(t) + " outside [1, " +
                            std::to_string(frame_count()) + "]");
  }
  FrameStack s;
  s.t = t;
  s.images.resize(static_cast<std::size_t>(camera_count()));
  parallel_for(s.images.size(), threads,
               [&](std::size_t c) { s.images[c] = image(static_cast<int>(c), t); });
  return s;
}

ManifestSource::ManifestSource(Manifest manifest) : manifest_(std::move(manifest)) {
  const auto first = image(manifest_.reference_index(), 1);
  size_ = first.size();
}

Image ManifestSource::image(int camera, int t) const {
  const auto path = manifest_.frame_path(camera, t);
  Image img = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (img.empty()) {
    throw Error("failed to decode frame " + std::to_string(t) + " of camera " +
                manifest_.camera_ids.at(static_cast<std::size_t>(camera)));
  }
  if (!size_.empty() && img.size() != size_) {
    throw Error("frame " + std::to_string(t) + " of camera " +
                manifest_.camera_ids.at(static_cast<std::size_t>(camera)) +
                " has mismatched dimensions");
  }
  return img;
}

FrameStack frame_stack(const Manifest& manifest, int t) {
  if (t < 1 || t > manifest.frame_count) {
    throw PreconditionError("frame index " + std::to_string(t) + " outside [1, " +
                            std::to_string(manifest.frame_count) + "]");
  }
  return ManifestSource(manifest).stack(t);
}

// --- colour space -----------------------------------------------------------

int Hsv::hue_index() const {
  const int h = static_cast<int>(std::lround(hue));
  return h >= 180 ? h - 180 : h;
}

Hsv to_hsv(Rgb rgb) {
  const int mx = std::max({rgb.r, rgb.g, rgb.b});
  const int mn = std::min({rgb.r, rgb.g, rgb.b});
  const int delta = mx - mn;

  Hsv out;
  out.value = mx;
  out.saturation = mx == 0 ? 0 : static_cast<int>(std::lround(255.0 * delta / mx));
  if (delta == 0) return out;

  double deg = 0.0;
  if (mx == rgb.r) {
    deg = 60.0 * (rgb.g - rgb.b) / delta;
  } else if (mx == rgb.g) {
    deg = 120.0 + 60.0 * (rgb.b - rgb.r) / delta;
  } else {
    deg = 240.0 + 60.0 * (rgb.r - rgb.g) / delta;
  }
  if (deg < 0.0) deg += 360.0;
  out.hue = deg / 2.0;
  if (out.hue >= 180.0) out.hue -= 180.0;
  return out;
}

Rgb to_rgb(const Hsv& hsv) {
  const double v = hsv.value;
  const double chroma = v * hsv.saturation / 255.0;
  const double sector = (hsv.hue * 2.0) / 60.0;
  const double x = chroma * (1.0 - std::abs(std::fmod(sector, 2.0) - 1.0));
  const double m = v - chroma;

  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(sector) % 6) {
    case 0: r = chroma; g = x; break;
    case 1: r = x; g = chroma; break;
    case 2: g = chroma; b = x; break;
    case 3: g = x; b = chroma; break;
    case 4: r = x; b = chroma; break;
    default: r = chroma; b = x; break;
  }
  auto to8 = [](double c) { return std::clamp(static_cast<int>(std::lround(c)), 0, 255); };
  return {to8(r + m), to8(g + m), to8(b + m)};
}

HsvImage to_hsv(const Image& bgr) {
  CV_Assert(bgr.type() == CV_8UC3);
  HsvImage out;
  out.hue.create(bgr.size(), CV_8UC1);
  out.hue_exact.create(bgr.size(), CV_32FC1);
  out.saturation.create(bgr.size(), CV_8UC1);
  out.value.create(bgr.size(), CV_8UC1);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* src = bgr.ptr<cv::Vec3b>(y);
    auto* h = out.hue.ptr<std::uint8_t>(y);
    auto* he = out.hue_exact.ptr<float>(y);
    auto* s = out.saturation.ptr<std::uint8_t>(y);
    auto* v = out.value.ptr<std::uint8_t>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      const auto hsv = to_hsv(Rgb{src[x][2], src[x][1], src[x][0]});
      h[x] = static_cast<std::uint8_t>(hsv.hue_index());
      he[x] = static_cast<float>(hsv.hue);
      s[x] = static_cast<std::uint8_t>(hsv.saturation);
      v[x] = static_cast<std::uint8_t>(hsv.value);
    }
  }
  return out;
}

Image to_bgr(const HsvImage& hsv) {
  Image out(hsv.size(), CV_8UC3);
  for (int y = 0; y < out.rows; ++y) {
    const auto* he = hsv.hue_exact.ptr<float>(y);
    const auto* s = hsv.saturation.ptr<std::uint8_t>(y);
    const auto* v = hsv.value.ptr<std::uint8_t>(y);
    auto* dst = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < out.cols; ++x) {
      const auto rgb = to_rgb(Hsv{he[x], s[x], v[x]});
      dst[x] = cv::Vec3b(static_cast<std::uint8_t>(rgb.b), static_cast<std::uint8_t>(rgb.g),
                         static_cast<std::uint8_t>(rgb.r));
    }
  }
  return out;
}

}  // namespace mcview

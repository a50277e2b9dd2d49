#include "mcview/geometry.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

namespace mcview {

using nlohmann::json;

namespace {

Eigen::Matrix3d normalised(const Eigen::Matrix3d& m) {
  if (std::abs(m(2, 2)) > 1e-12) return m / m(2, 2);
  const double n = m.norm();
  return n > 0 ? Eigen::Matrix3d(m / n) : m;
}

}  // namespace

Homography::Homography() : m_(Eigen::Matrix3d::Identity()) {}

Homography::Homography(const Eigen::Matrix3d& m) : m_(normalised(m)) {
  if (!m_.allFinite()) throw DegenerateConfiguration("homography has non-finite entries");
  if (std::abs(m_.determinant()) <= 1e-9) throw DegenerateConfiguration("singular homography");
}

Homography Homography::translation(double dx, double dy) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = dx;
  m(1, 2) = dy;
  return Homography(m);
}

Vec2 Homography::apply(Vec2 p) const {
  const double w = m_(2, 0) * p.x + m_(2, 1) * p.y + m_(2, 2);
  return {(m_(0, 0) * p.x + m_(0, 1) * p.y + m_(0, 2)) / w,
          (m_(1, 0) * p.x + m_(1, 1) * p.y + m_(1, 2)) / w};
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

bool Homography::is_identity(double tol) const {
  return (m_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol;
}

Homography operator*(const Homography& a, const Homography& b) {
  return Homography(a.m_ * b.m_);
}

// --- estimation --------------------------------------------------------------

namespace {

// Similarity moving the centroid to the origin with mean distance sqrt(2).
Eigen::Matrix3d normalising_transform(const std::vector<Vec2>& pts) {
  double cx = 0, cy = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean = 0;
  for (const auto& p : pts) mean += std::hypot(p.x - cx, p.y - cy);
  mean /= static_cast<double>(pts.size());
  const double s = mean > 0 ? std::sqrt(2.0) / mean : 1.0;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

Vec2 transform(const Eigen::Matrix3d& m, Vec2 p) {
  const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
  return {(m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2)) / w,
          (m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)) / w};
}

// DLT on already-normalised points; returns the raw null vector as a matrix.
Eigen::Matrix3d dlt_core(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  Eigen::Matrix<double, 9, 9> ata = Eigen::Matrix<double, 9, 9>::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i].x, y = a[i].y, u = b[i].x, v = b[i].y;
    Eigen::Matrix<double, 9, 1> r1, r2;
    r1 << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    r2 << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    ata.noalias() += r1 * r1.transpose();
    ata.noalias() += r2 * r2.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> solver(ata);
  const Eigen::Matrix<double, 9, 1> h = solver.eigenvectors().col(0);
  Eigen::Matrix3d m;
  m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return m;
}

struct NormalisedProblem {
  Eigen::Matrix3d ta, tb;
  std::vector<Vec2> a, b;
};

NormalisedProblem normalise(const std::vector<Correspondence>& corr,
                            const std::vector<std::size_t>& subset) {
  NormalisedProblem p;
  std::vector<Vec2> a, b;
  a.reserve(subset.size());
  b.reserve(subset.size());
  for (auto i : subset) {
    a.push_back(corr[i].a);
    b.push_back(corr[i].b);
  }
  p.ta = normalising_transform(a);
  p.tb = normalising_transform(b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    p.a.push_back(transform(p.ta, a[i]));
    p.b.push_back(transform(p.tb, b[i]));
  }
  return p;
}

Eigen::Matrix3d denormalise(const NormalisedProblem& p, const Eigen::Matrix3d& hn) {
  return p.tb.inverse() * hn * p.ta;
}

bool collinear(Vec2 p0, Vec2 p1, Vec2 p2) {
  const Vec2 u = p1 - p0, v = p2 - p0;
  const double cross = u.x * v.y - u.y * v.x;
  return std::abs(cross) <= 1e-3 * norm(u) * norm(v) + 1e-12;
}

bool sample_degenerate(const std::vector<Correspondence>& corr,
                       const std::array<std::size_t, 4>& idx) {
  for (int side = 0; side < 2; ++side) {
    auto pt = [&](int k) {
      const auto& c = corr[idx[static_cast<std::size_t>(k)]];
      return side == 0 ? c.a : c.b;
    };
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        for (int k = j + 1; k < 4; ++k) {
          if (collinear(pt(i), pt(j), pt(k))) return true;
        }
      }
    }
  }
  return false;
}

// True when the points span (numerically) less than a plane region.
bool spans_line_only(const std::vector<Vec2>& pts) {
  if (pts.size() < 3) return true;
  double cx = 0, cy = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : pts) {
    sxx += (p.x - cx) * (p.x - cx);
    syy += (p.y - cy) * (p.y - cy);
    sxy += (p.x - cx) * (p.y - cy);
  }
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
  const double lmax = tr / 2 + disc;
  const double lmin = tr / 2 - disc;
  return lmax <= 0 || lmin <= 1e-10 * lmax;
}

double transfer_error(const Eigen::Matrix3d& h, const Correspondence& c) {
  const double w = h(2, 0) * c.a.x + h(2, 1) * c.a.y + h(2, 2);
  if (!(std::abs(w) > 1e-15)) return std::numeric_limits<double>::infinity();
  const double x = (h(0, 0) * c.a.x + h(0, 1) * c.a.y + h(0, 2)) / w;
  const double y = (h(1, 0) * c.a.x + h(1, 1) * c.a.y + h(1, 2)) / w;
  return std::hypot(x - c.b.x, y - c.b.y);
}

// Levenberg-Marquardt on the forward transfer error in normalised coordinates
// with h22 fixed to 1.
Eigen::Matrix3d refine_lm(const NormalisedProblem& p, Eigen::Matrix3d hn) {
  if (std::abs(hn(2, 2)) < 1e-8) return hn;
  hn /= hn(2, 2);
  Eigen::Matrix<double, 8, 1> params;
  params << hn(0, 0), hn(0, 1), hn(0, 2), hn(1, 0), hn(1, 1), hn(1, 2), hn(2, 0), hn(2, 1);

  auto cost_and_normal = [&](const Eigen::Matrix<double, 8, 1>& q, Eigen::Matrix<double, 8, 8>* jtj,
                             Eigen::Matrix<double, 8, 1>* jtr) {
    double cost = 0;
    if (jtj) jtj->setZero();
    if (jtr) jtr->setZero();
    for (std::size_t i = 0; i < p.a.size(); ++i) {
      const double x = p.a[i].x, y = p.a[i].y;
      const double u = q(0) * x + q(1) * y + q(2);
      const double v = q(3) * x + q(4) * y + q(5);
      const double w = q(6) * x + q(7) * y + 1.0;
      const double rx = u / w - p.b[i].x;
      const double ry = v / w - p.b[i].y;
      cost += rx * rx + ry * ry;
      if (!jtj) continue;
      Eigen::Matrix<double, 8, 1> jx, jy;
      jx << x / w, y / w, 1 / w, 0, 0, 0, -u * x / (w * w), -u * y / (w * w);
      jy << 0, 0, 0, x / w, y / w, 1 / w, -v * x / (w * w), -v * y / (w * w);
      jtj->noalias() += jx * jx.transpose() + jy * jy.transpose();
      *jtr += jx * rx + jy * ry;
    }
    return cost;
  };

  double lambda = 1e-3;
  Eigen::Matrix<double, 8, 8> jtj;
  Eigen::Matrix<double, 8, 1> jtr;
  double cost = cost_and_normal(params, &jtj, &jtr);
  for (int iter = 0; iter < 30 && cost > 0; ++iter) {
    Eigen::Matrix<double, 8, 8> a = jtj;
    a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::Matrix<double, 8, 1> step = a.ldlt().solve(-jtr);
    if (!step.allFinite()) break;
    const Eigen::Matrix<double, 8, 1> candidate = params + step;
    const double new_cost = cost_and_normal(candidate, nullptr, nullptr);
    if (new_cost < cost) {
      params = candidate;
      const bool converged = (cost - new_cost) <= 1e-15 * cost || step.norm() < 1e-14;
      cost = cost_and_normal(params, &jtj, &jtr);
      lambda = std::max(lambda / 10, 1e-12);
      if (converged) break;
    } else {
      lambda *= 10;
      if (lambda > 1e12) break;
    }
  }
  Eigen::Matrix3d out;
  out << params(0), params(1), params(2), params(3), params(4), params(5), params(6), params(7), 1.0;
  return out;
}

Eigen::Matrix3d fit_subset(const std::vector<Correspondence>& corr,
                           const std::vector<std::size_t>& subset, bool refine) {
  const auto p = normalise(corr, subset);
  Eigen::Matrix3d hn = dlt_core(p.a, p.b);
  if (refine) hn = refine_lm(p, hn);
  return denormalise(p, hn);
}

}  // namespace

Homography fit_homography_dlt(const std::vector<Correspondence>& correspondences) {
  if (correspondences.size() < 4) throw PreconditionError("homography needs at least 4 correspondences");
  std::vector<std::size_t> all(correspondences.size());
  std::iota(all.begin(), all.end(), 0);
  return Homography(fit_subset(correspondences, all, false));
}

HomographyEstimate estimate_homography(const std::vector<Correspondence>& corr,
                                       const RansacOptions& options) {
  const std::size_t n = corr.size();
  if (n < 4) throw PreconditionError("homography needs at least 4 correspondences");

  std::vector<Vec2> pa, pb;
  for (const auto& c : corr) {
    pa.push_back(c.a);
    pb.push_back(c.b);
  }
  if (spans_line_only(pa) || spans_line_only(pb)) {
    throw DegenerateConfiguration("degenerate: correspondences are collinear");
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::vector<std::size_t> best_inliers;
  double best_error = std::numeric_limits<double>::infinity();
  long needed = options.max_iterations;
  int valid_samples = 0;
  const bool exhaustive = n == 4;

  for (long iter = 0; iter < needed && iter < options.max_iterations; ++iter) {
    std::array<std::size_t, 4> idx{};
    if (exhaustive) {
      idx = {0, 1, 2, 3};
    } else {
      for (int k = 0; k < 4; ++k) {
        std::size_t candidate = 0;
        do {
          candidate = pick(rng);
        } while (std::find(idx.begin(), idx.begin() + k, candidate) != idx.begin() + k);
        idx[static_cast<std::size_t>(k)] = candidate;
      }
    }
    if (sample_degenerate(corr, idx)) {
      if (exhaustive) break;
      continue;
    }
    ++valid_samples;
    const Eigen::Matrix3d h = fit_subset(corr, {idx.begin(), idx.end()}, false);
    if (!h.allFinite()) continue;

    std::vector<std::size_t> inliers;
    double err_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = transfer_error(h, corr[i]);
      if (e <= options.threshold) {
        inliers.push_back(i);
        err_sum += e;
      }
    }
    if (inliers.size() > best_inliers.size() ||
        (inliers.size() == best_inliers.size() && err_sum < best_error)) {
      best_inliers = std::move(inliers);
      best_error = err_sum;
      const double w = static_cast<double>(best_inliers.size()) / static_cast<double>(n);
      const double miss = 1.0 - std::pow(w, 4);
      if (miss <= 0.0) {
        needed = iter + 1;
      } else {
        const double k = std::log(1.0 - options.confidence) / std::log(miss);
        needed = std::min<long>(options.max_iterations, static_cast<long>(std::ceil(k)));
      }
    }
    if (exhaustive) break;
  }

  if (valid_samples == 0 || best_inliers.size() < 4) {
    throw DegenerateConfiguration("degenerate: no non-collinear minimal sample");
  }

  // Refit on the consensus set, then let the refined model re-select inliers.
  Eigen::Matrix3d h = fit_subset(corr, best_inliers, true);
  for (int round = 0; round < 3; ++round) {
    std::vector<std::size_t> inliers;
    for (std::size_t i = 0; i < n; ++i) {
      if (transfer_error(h, corr[i]) <= options.threshold) inliers.push_back(i);
    }
    if (inliers == best_inliers || inliers.size() < 4) break;
    best_inliers = std::move(inliers);
    h = fit_subset(corr, best_inliers, true);
  }

  std::vector<Vec2> ia, ib;
  for (auto i : best_inliers) {
    ia.push_back(corr[i].a);
    ib.push_back(corr[i].b);
  }
  if (spans_line_only(ia) || spans_line_only(ib)) {
    throw DegenerateConfiguration("degenerate: inliers are collinear");
  }

  HomographyEstimate out{Homography(h), std::vector<bool>(n, false), 0, 0.0};
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = transfer_error(out.h.matrix(), corr[i]);
    if (e <= options.threshold) {
      out.inliers[i] = true;
      ++out.inlier_count;
      sum += e;
    }
  }
  out.mean_error = out.inlier_count > 0 ? sum / out.inlier_count : 0.0;
  return out;
}

// --- atlas ---------------------------------------------------------------------

Homography HomographyAtlas::between(int from, int to) const {
  return to_reference.at(static_cast<std::size_t>(to)).inverse() *
         to_reference.at(static_cast<std::size_t>(from));
}

HomographyAtlas HomographyAtlas::identity(int camera_count, int reference,
                                          std::vector<std::string> ids) {
  HomographyAtlas atlas;
  atlas.reference = reference;
  atlas.to_reference.assign(static_cast<std::size_t>(camera_count), Homography::identity());
  atlas.routes.assign(static_cast<std::size_t>(camera_count), "identity");
  if (ids.empty()) {
    for (int c = 0; c < camera_count; ++c) ids.push_back("cam" + std::to_string(c + 1));
  }
  atlas.camera_ids = std::move(ids);
  return atlas;
}

HomographyAtlas build_atlas(const MatchSet& matches, int camera_count, int reference,
                            const std::vector<std::string>& camera_ids,
                            const AtlasOptions& options) {
  auto atlas = HomographyAtlas::identity(camera_count, reference, camera_ids);
  atlas.routes[static_cast<std::size_t>(reference)] = "reference";
  atlas.calibration_frame = matches.window.first;
  if (camera_count <= 1) return atlas;

  auto estimate_pair = [&](int from, int to) -> std::optional<HomographyEstimate> {
    const auto corr = matches.oriented(from, to);
    if (static_cast<int>(corr.size()) < std::max(4, options.min_inliers)) return std::nullopt;
    auto ransac = options.ransac;
    ransac.seed = mix_seed(options.ransac.seed,
                           static_cast<std::uint64_t>(from) * 1024 + static_cast<std::uint64_t>(to));
    try {
      auto est = estimate_homography(corr, ransac);
      if (est.inlier_count < options.min_inliers) return std::nullopt;
      return est;
    } catch (const DegenerateConfiguration&) {
      return std::nullopt;
    }
  };

  std::vector<std::optional<HomographyEstimate>> direct(static_cast<std::size_t>(camera_count));
  for (int c = 0; c < camera_count; ++c) {
    if (c != reference) direct[static_cast<std::size_t>(c)] = estimate_pair(c, reference);
  }

  for (int c = 0; c < camera_count; ++c) {
    if (c == reference) continue;
    const auto& d = direct[static_cast<std::size_t>(c)];
    if (d) {
      atlas.to_reference[static_cast<std::size_t>(c)] = d->h;
      atlas.routes[static_cast<std::size_t>(c)] = "direct";
      atlas.stats.push_back({c, reference, d->inlier_count, d->mean_error});
      continue;
    }

    int best_via = -1;
    int best_support = -1;
    std::optional<HomographyEstimate> best_hop;
    for (int k = 0; k < camera_count; ++k) {
      const auto& dk = direct[static_cast<std::size_t>(k)];
      if (k == c || k == reference || !dk) continue;
      auto hop = estimate_pair(c, k);
      if (!hop) continue;
      const int support = std::min(hop->inlier_count, dk->inlier_count);
      if (support > best_support) {
        best_support = support;
        best_via = k;
        best_hop = std::move(hop);
      }
    }
    if (best_via < 0) {
      const auto name = c < static_cast<int>(atlas.camera_ids.size())
                            ? atlas.camera_ids[static_cast<std::size_t>(c)]
                            : std::to_string(c);
      throw CalibrationFailed(c, "calibration failed for camera " + name);
    }
    atlas.to_reference[static_cast<std::size_t>(c)] =
        direct[static_cast<std::size_t>(best_via)]->h * best_hop->h;
    atlas.routes[static_cast<std::size_t>(c)] =
        "via " + atlas.camera_ids[static_cast<std::size_t>(best_via)];
    atlas.stats.push_back({c, best_via, best_hop->inlier_count, best_hop->mean_error});
  }
  return atlas;
}

// --- warping -------------------------------------------------------------------

WarpResult warp(const Image& image, const Homography& h, cv::Size canvas, Vec2 origin,
                int threads) {
  CV_Assert(image.type() == CV_8UC3);
  WarpResult out{Image(canvas, CV_8UC3, cv::Scalar::all(0)), Mask(canvas, CV_8UC1, cv::Scalar(0))};
  const Eigen::Matrix3d inv = h.inverse().matrix();
  const double max_x = image.cols - 1;
  const double max_y = image.rows - 1;
  constexpr double kEps = 1e-9;

  parallel_for(static_cast<std::size_t>(canvas.height), threads, [&](std::size_t row) {
    const int v = static_cast<int>(row);
    auto* dst = out.image.ptr<cv::Vec3b>(v);
    auto* valid = out.valid.ptr<std::uint8_t>(v);
    const double ty = v + origin.y;
    for (int u = 0; u < canvas.width; ++u) {
      const double tx = u + origin.x;
      const double w = inv(2, 0) * tx + inv(2, 1) * ty + inv(2, 2);
      if (!(w > 1e-12)) continue;
      double sx = (inv(0, 0) * tx + inv(0, 1) * ty + inv(0, 2)) / w;
      double sy = (inv(1, 0) * tx + inv(1, 1) * ty + inv(1, 2)) / w;
      if (sx < -kEps || sy < -kEps || sx > max_x + kEps || sy > max_y + kEps) continue;
      sx = std::clamp(sx, 0.0, max_x);
      sy = std::clamp(sy, 0.0, max_y);
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const int x1 = fx > 0 ? x0 + 1 : x0;
      const int y1 = fy > 0 ? y0 + 1 : y0;
      const auto* r0 = image.ptr<cv::Vec3b>(y0);
      const auto* r1 = image.ptr<cv::Vec3b>(y1);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = r0[x0][ch] + fx * (r0[x1][ch] - r0[x0][ch]);
        const double bottom = r1[x0][ch] + fx * (r1[x1][ch] - r1[x0][ch]);
        const double val = top + fy * (bottom - top);
        dst[u][ch] = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
      }
      valid[u] = 255;
    }
  });
  return out;
}

AlignedStack apply_atlas(const FrameStack& stack, const HomographyAtlas& atlas, int threads) {
  if (atlas.camera_count() < stack.camera_count()) {
    throw PreconditionError("atlas does not cover every camera of the stack");
  }
  AlignedStack out;
  out.t = stack.t;
  out.images.resize(stack.images.size());
  out.valid.resize(stack.images.size());
  parallel_for(stack.images.size(), threads, [&](std::size_t c) {
    const auto& h = atlas.to_reference[c];
    if (h.is_identity()) {
      out.images[c] = stack.images[c].clone();
      out.valid[c] = Mask(stack.images[c].size(), CV_8UC1, cv::Scalar(255));
      return;
    }
    auto w = warp(stack.images[c], h, stack.images[c].size());
    out.images[c] = std::move(w.image);
    out.valid[c] = std::move(w.valid);
  });
  return out;
}

// --- serialisation -------------------------------------------------------------

void write_atlas(const HomographyAtlas& atlas, const std::filesystem::path& path) {
  json doc;
  doc["segment"] = atlas.segment_id;
  doc["reference"] = atlas.camera_ids.at(static_cast<std::size_t>(atlas.reference));
  doc["calibration_frame"] = atlas.calibration_frame;
  doc["cameras"] = json::array();
  for (int c = 0; c < atlas.camera_count(); ++c) {
    const auto& m = atlas.to_reference[static_cast<std::size_t>(c)].matrix();
    std::vector<double> entries;
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) entries.push_back(m(r, k));
    }
    doc["cameras"].push_back({{"id", atlas.camera_ids[static_cast<std::size_t>(c)]},
                              {"matrix", entries},
                              {"route", atlas.routes[static_cast<std::size_t>(c)]}});
  }
  doc["pairs"] = json::array();
  for (const auto& s : atlas.stats) {
    doc["pairs"].push_back({{"from", atlas.camera_ids[static_cast<std::size_t>(s.from)]},
                            {"to", atlas.camera_ids[static_cast<std::size_t>(s.to)]},
                            {"inliers", s.inliers},
                            {"mean_error_px", s.mean_error}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write atlas " + path.string());
  out << doc.dump(2) << '\n';
}

HomographyAtlas read_atlas(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open atlas " + path.string());
  const auto doc = json::parse(in);
  HomographyAtlas atlas;
  atlas.segment_id = doc.at("segment").get<int>();
  atlas.calibration_frame = doc.value("calibration_frame", 0);
  const auto reference = doc.at("reference").get<std::string>();
  auto index_of = [&](const std::string& id) {
    const auto it = std::find(atlas.camera_ids.begin(), atlas.camera_ids.end(), id);
    if (it == atlas.camera_ids.end()) throw Error("atlas names unknown camera " + id);
    return static_cast<int>(it - atlas.camera_ids.begin());
  };
  for (const auto& cam : doc.at("cameras")) {
    atlas.camera_ids.push_back(cam.at("id").get<std::string>());
    const auto e = cam.at("matrix").get<std::vector<double>>();
    if (e.size() != 9) throw Error("atlas matrix must have 9 entries");
    Eigen::Matrix3d m;
    m << e[0], e[1], e[2], e[3], e[4], e[5], e[6], e[7], e[8];
    atlas.to_reference.emplace_back(m);
    atlas.routes.push_back(cam.value("route", std::string{}));
  }
  atlas.reference = index_of(reference);
  for (const auto& p : doc.at("pairs")) {
    atlas.stats.push_back({index_of(p.at("from").get<std::string>()),
                           index_of(p.at("to").get<std::string>()), p.at("inliers").get<int>(),
                           p.at("mean_error_px").get<double>()});
  }
  return atlas;
}

}  // namespace mcview

#include "mcview/isolation_forest.hpp"

#include "mcview/common.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace mcview {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;

struct TreeBuilder {
  const std::vector<std::vector<double>>& points;
  std::mt19937_64& rng;
  int height_limit;
  IsolationTree nodes;

  int grow(std::vector<int>& idx, int begin, int end, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[id].size = end - begin;
    if (end - begin <= 1 || depth >= height_limit) return id;

    // only dimensions that still vary can split
    const int dims = static_cast<int>(points[idx[begin]].size());
    std::vector<int> live;
    std::vector<std::pair<double, double>> range(dims);
    for (int d = 0; d < dims; ++d) {
      double lo = points[idx[begin]][d], hi = lo;
      for (int i = begin + 1; i < end; ++i) {
        lo = std::min(lo, points[idx[i]][d]);
        hi = std::max(hi, points[idx[i]][d]);
      }
      range[d] = {lo, hi};
      if (hi > lo) live.push_back(d);
    }
    if (live.empty()) return id;

    const int dim = live[std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng)];
    const auto [lo, hi] = range[dim];
    double split = std::uniform_real_distribution<double>(lo, hi)(rng);
    if (split <= lo) split = std::nextafter(lo, hi);

    const auto mid = std::partition(idx.begin() + begin, idx.begin() + end,
                                    [&](int i) { return points[i][dim] < split; });
    const int m = static_cast<int>(mid - idx.begin());
    nodes[id].dim = dim;
    nodes[id].split = split;
    const int l = grow(idx, begin, m, depth + 1);
    const int r = grow(idx, m, end, depth + 1);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }
};

double tree_path(const IsolationTree& tree, const std::vector<double>& x) {
  int node = 0;
  double depth = 0;
  while (tree[node].dim >= 0) {
    node = x[tree[node].dim] < tree[node].split ? tree[node].left : tree[node].right;
    depth += 1;
  }
  return depth + average_path_length(tree[node].size);
}

}  // namespace

double average_path_length(double n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  return 2.0 * (std::log(n - 1.0) + kEulerGamma) - 2.0 * (n - 1.0) / n;
}

double IsolationForestModel::path_length(const std::vector<double>& point) const {
  if (trees.empty()) return 0.0;
  double sum = 0;
  for (const auto& tree : trees) sum += tree_path(tree, point);
  return sum / static_cast<double>(trees.size());
}

double IsolationForestModel::score(const std::vector<double>& point) const {
  const double c = average_path_length(subsample_size);
  if (c <= 0) return 0.5;
  return std::pow(2.0, -path_length(point) / c);
}

IsolationForestModel fit_isolation_forest(const std::vector<std::vector<double>>& points,
                                          const IsolationForestOptions& options) {
  if (points.empty()) throw PreconditionError("isolation forest needs data");
  if (options.tree_count < 1 || options.subsample < 1 || options.contamination < 0 ||
      options.contamination >= 1) {
    throw PreconditionError("invalid isolation forest options");
  }
  const int n = static_cast<int>(points.size());
  IsolationForestModel model;
  model.tree_count = options.tree_count;
  model.subsample_size = std::min(options.subsample, n);
  model.dims = static_cast<int>(points.front().size());
  model.contamination = options.contamination;

  std::mt19937_64 rng(options.seed);
  const int height_limit =
      static_cast<int>(std::ceil(std::log2(std::max(2, model.subsample_size))));
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  for (int k = 0; k < options.tree_count; ++k) {
    // partial Fisher-Yates: the first subsample_size entries are the draw
    for (int i = 0; i < model.subsample_size; ++i) {
      std::swap(all[i], all[std::uniform_int_distribution<int>(i, n - 1)(rng)]);
    }
    std::vector<int> idx(all.begin(), all.begin() + model.subsample_size);
    TreeBuilder builder{points, rng, height_limit, {}};
    builder.grow(idx, 0, model.subsample_size, 0);
    model.trees.push_back(std::move(builder.nodes));
  }

  std::vector<double> scores;
  scores.reserve(points.size());
  for (const auto& p : points) scores.push_back(model.score(p));
  std::sort(scores.begin(), scores.end());
  const auto k = static_cast<std::size_t>(std::floor(options.contamination * n));
  model.threshold = scores[scores.size() - 1 - std::min(k, scores.size() - 1)];
  return model;
}

IsolationForestModel fit_isolation_forest(const std::vector<double>& values,
                                          const IsolationForestOptions& options) {
  std::vector<std::vector<double>> points;
  points.reserve(values.size());
  for (double v : values) points.push_back({v});
  return fit_isolation_forest(points, options);
}

std::vector<bool> outlier_flags(const IsolationForestModel& model,
                                const std::vector<double>& values) {
  std::vector<bool> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(model.is_outlier({v}));
  return out;
}

}  // namespace mcview

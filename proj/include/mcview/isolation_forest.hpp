#pragma once

#include <cstdint>
#include <vector>

namespace mcview {

struct IsolationForestOptions {
  int tree_count = 100;
  int subsample = 256;
  double contamination = 0.1;  // expected outlier fraction
  std::uint64_t seed = 0;
};

struct IsolationNode {
  int dim = -1;  // -1 marks a leaf
  double split = 0.0;
  int left = -1;
  int right = -1;
  int size = 0;  // training points that reached the node
};

using IsolationTree = std::vector<IsolationNode>;  // node 0 is the root

/// Expected path length of an unsuccessful BST search among n points, c(n).
double average_path_length(double n);

struct IsolationForestModel {
  int tree_count = 0;
  int subsample_size = 0;
  int dims = 0;
  double contamination = 0.0;
  double threshold = 1.0;  // scores strictly above are outliers
  std::vector<IsolationTree> trees;

  /// Mean (adjusted) isolation depth over the trees.
  double path_length(const std::vector<double>& point) const;
  /// 2^(-E[h(x)] / c(psi)), in (0, 1].
  double score(const std::vector<double>& point) const;
  bool is_outlier(const std::vector<double>& point) const { return score(point) > threshold; }
};

/// Fits on row-major points and sets the threshold at the (1 - contamination)
/// quantile of the training scores.
IsolationForestModel fit_isolation_forest(const std::vector<std::vector<double>>& points,
                                          const IsolationForestOptions& options = {});
IsolationForestModel fit_isolation_forest(const std::vector<double>& values,
                                          const IsolationForestOptions& options = {});

/// Outlier flag per value under a one-dimensional model.
std::vector<bool> outlier_flags(const IsolationForestModel& model,
                                const std::vector<double>& values);

}  // namespace mcview

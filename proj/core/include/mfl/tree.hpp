#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfl/dataset.hpp"

namespace mfl {

enum class ComplexityMode { leaves, internal };

struct TreeNode {
  bool is_leaf = true;
  // internal nodes; x[feature_index] <= threshold routes left
  int feature_index = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // leaves
  double positive_fraction = 0.0;
  int sample_count = 0;
};

/// Fitted axis-aligned binary classification tree. Nodes are stored in
/// pre-order with nodes()[0] as the root.
class TreeModel {
 public:
  /// Validates the proper-binary-tree shape and leaf fractions.
  static TreeModel from_nodes(std::vector<TreeNode> nodes, std::size_t n_features);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int leaf_count() const { return leaf_count_; }
  int internal_count() const { return internal_count_; }
  std::size_t n_features() const { return n_features_; }

  /// Routes x to a leaf and returns that leaf's positive fraction.
  double predict_proba(std::span<const double> x) const;

 private:
  TreeModel() = default;
  std::vector<TreeNode> nodes_;
  int leaf_count_ = 0;
  int internal_count_ = 0;
  std::size_t n_features_ = 0;
};

struct TreeParams {
  int max_depth = -1;        // -1: unlimited
  int min_samples_leaf = 1;  // >= 1
  int max_features = 0;      // 0: floor(sqrt(p)); otherwise in [1, p]
};

/// n indices drawn uniformly with replacement from [0, n).
std::vector<std::size_t> bootstrap_sample(std::size_t n_rows, std::uint64_t rng_seed);

/// Greedy recursive partitioning by Gini-impurity reduction. At each node a
/// fresh random subset of max_features features is evaluated; the split
/// point is the midpoint between consecutive distinct sorted values with
/// the largest reduction (ties: lowest feature index, then lowest
/// threshold). Recursion stops on purity, the depth limit, children smaller
/// than min_samples_leaf, or no strictly positive reduction.
TreeModel fit_tree(const Dataset& d, std::span<const std::size_t> indices,
                   const TreeParams& params, std::uint64_t rng_seed);

double predict_proba_tree(const TreeModel& t, std::span<const double> x);

/// Leaf or internal node count of the tree, per mode.
int complexity(const TreeModel& t, ComplexityMode mode);

}  // namespace mfl

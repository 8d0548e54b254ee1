#include "mfl/tree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mfl/rng.hpp"

namespace mfl {

namespace {

constexpr double kMinGain = 1e-12;

double gini(std::size_t positives, std::size_t total) {
  const double p = static_cast<double>(positives) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

}  // namespace

TreeModel TreeModel::from_nodes(std::vector<TreeNode> nodes, std::size_t n_features) {
  if (nodes.empty()) throw std::invalid_argument("TreeModel: no nodes");
  TreeModel t;
  t.n_features_ = n_features;
  for (const auto& node : nodes) {
    if (node.is_leaf) {
      if (!(node.positive_fraction >= 0.0 && node.positive_fraction <= 1.0)) {
        throw std::invalid_argument("TreeModel: leaf fraction outside [0, 1]");
      }
      ++t.leaf_count_;
    } else {
      if (!std::isfinite(node.threshold)) {
        throw std::invalid_argument("TreeModel: non-finite threshold");
      }
      if (node.left < 0 || node.right < 0 ||
          node.left >= static_cast<int>(nodes.size()) ||
          node.right >= static_cast<int>(nodes.size())) {
        throw std::invalid_argument("TreeModel: child index out of range");
      }
      if (node.feature_index < 0 ||
          static_cast<std::size_t>(node.feature_index) >= n_features) {
        throw std::invalid_argument("TreeModel: feature index out of range");
      }
      ++t.internal_count_;
    }
  }
  if (t.leaf_count_ != t.internal_count_ + 1) {
    throw std::invalid_argument("TreeModel: not a proper binary tree");
  }
  t.nodes_ = std::move(nodes);
  return t;
}

double TreeModel::predict_proba(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw std::invalid_argument("TreeModel: feature vector arity mismatch");
  }
  int at = 0;
  while (!nodes_[at].is_leaf) {
    const TreeNode& node = nodes_[at];
    at = x[static_cast<std::size_t>(node.feature_index)] <= node.threshold
             ? node.left
             : node.right;
  }
  return nodes_[at].positive_fraction;
}

std::vector<std::size_t> bootstrap_sample(std::size_t n_rows, std::uint64_t rng_seed) {
  if (n_rows == 0) throw std::invalid_argument("bootstrap_sample: empty dataset");
  Rng rng(rng_seed);
  std::vector<std::size_t> idx(n_rows);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.next_below(n_rows));
  return idx;
}

TreeModel fit_tree(const Dataset& d, std::span<const std::size_t> indices,
                   const TreeParams& params, std::uint64_t rng_seed) {
  if (indices.empty()) throw std::invalid_argument("fit_tree: no training indices");
  if (params.min_samples_leaf < 1) {
    throw std::invalid_argument("fit_tree: min_samples_leaf must be >= 1");
  }
  const std::size_t p = d.n_cols();
  std::size_t max_features;
  if (params.max_features == 0) {
    max_features = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));
  } else {
    if (params.max_features < 0 || static_cast<std::size_t>(params.max_features) > p) {
      throw std::invalid_argument("fit_tree: max_features outside [1, p]");
    }
    max_features = static_cast<std::size_t>(params.max_features);
  }
  const auto msl = static_cast<std::size_t>(params.min_samples_leaf);

  Rng rng(rng_seed);
  std::vector<std::size_t> work(indices.begin(), indices.end());
  std::vector<TreeNode> nodes;

  // Slots are allocated when a frame is popped, which lays the node array
  // out in pre-order (the whole left subtree before the right child).
  struct Frame {
    std::size_t lo, hi;
    int depth;
    int parent;  // -1 for the root
    bool is_left;
  };
  std::vector<Frame> stack{{0, work.size(), 0, -1, false}};
  std::vector<std::pair<double, std::uint8_t>> column;  // (value, label) scratch

  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();
    const int slot = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (fr.parent >= 0) {
      auto& parent = nodes[static_cast<std::size_t>(fr.parent)];
      (fr.is_left ? parent.left : parent.right) = slot;
    }

    const std::size_t n_node = fr.hi - fr.lo;
    std::size_t positives = 0;
    for (std::size_t i = fr.lo; i < fr.hi; ++i) positives += d.label(work[i]);

    auto make_leaf = [&] {
      TreeNode& leaf = nodes[static_cast<std::size_t>(slot)];
      leaf.is_leaf = true;
      leaf.positive_fraction =
          static_cast<double>(positives) / static_cast<double>(n_node);
      leaf.sample_count = static_cast<int>(n_node);
    };

    const bool pure = positives == 0 || positives == n_node;
    const bool depth_capped = params.max_depth >= 0 && fr.depth >= params.max_depth;
    if (pure || depth_capped || n_node < 2 * msl) {
      make_leaf();
      continue;
    }

    // Fresh random feature subset per node, scanned in ascending order so
    // ties resolve to the lowest feature index, then the lowest threshold.
    auto subset = rng.sample_without_replacement(p, max_features);
    std::sort(subset.begin(), subset.end());

    SplitChoice best;
    const double node_gini = gini(positives, n_node);
    for (std::size_t feature : subset) {
      column.clear();
      for (std::size_t i = fr.lo; i < fr.hi; ++i) {
        column.emplace_back(d.at(work[i], feature), d.label(work[i]));
      }
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      std::size_t left_pos = 0;
      for (std::size_t k = 1; k < n_node; ++k) {
        left_pos += column[k - 1].second;
        if (column[k].first == column[k - 1].first) continue;
        const std::size_t n_left = k;
        const std::size_t n_right = n_node - k;
        if (n_left < msl || n_right < msl) continue;
        const double child_impurity =
            (static_cast<double>(n_left) * gini(left_pos, n_left) +
             static_cast<double>(n_right) * gini(positives - left_pos, n_right)) /
            static_cast<double>(n_node);
        const double gain = node_gini - child_impurity;
        if (gain > kMinGain && gain > best.gain) {
          double threshold =
              column[k - 1].first + (column[k].first - column[k - 1].first) / 2.0;
          // keep the partition consistent with the prefix counts even when
          // the midpoint rounds up to the right value
          if (threshold >= column[k].first) threshold = column[k - 1].first;
          best = SplitChoice{gain, static_cast<int>(feature), threshold};
        }
      }
    }

    if (best.feature == -1) {
      make_leaf();
      continue;
    }

    const std::size_t feature = static_cast<std::size_t>(best.feature);
    auto mid = std::stable_partition(
        work.begin() + static_cast<std::ptrdiff_t>(fr.lo),
        work.begin() + static_cast<std::ptrdiff_t>(fr.hi),
        [&](std::size_t i) { return d.at(i, feature) <= best.threshold; });
    const auto split_at = static_cast<std::size_t>(mid - work.begin());

    TreeNode& node = nodes[static_cast<std::size_t>(slot)];
    node.is_leaf = false;
    node.feature_index = best.feature;
    node.threshold = best.threshold;
    // right pushed first so the left subtree is numbered first
    stack.push_back({split_at, fr.hi, fr.depth + 1, slot, false});
    stack.push_back({fr.lo, split_at, fr.depth + 1, slot, true});
  }

  return TreeModel::from_nodes(std::move(nodes), p);
}

double predict_proba_tree(const TreeModel& t, std::span<const double> x) {
  return t.predict_proba(x);
}

int complexity(const TreeModel& t, ComplexityMode mode) {
  return mode == ComplexityMode::leaves ? t.leaf_count() : t.internal_count();
}

}  // namespace mfl

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heartml/error.hpp"
#include "heartml/math.hpp"
#include "heartml/preprocess.hpp"

namespace heartml {

enum class BoostMode { FirstOrder, SecondOrder };

/// Flat node storage, root at index 0. A node with feature < 0 is a leaf.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  /// Leaf weight reached by x; value < threshold goes left.
  double route(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return nodes[i].weight;
  }

  std::size_t depth(std::size_t node = 0) const {
    const auto& n = nodes[node];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth(static_cast<std::size_t>(n.left)), depth(static_cast<std::size_t>(n.right)));
  }

  friend bool operator==(const Tree&, const Tree&) = default;
};

/// Per-row first and second derivatives of log-loss w.r.t. the margin.
struct GradHess {
  std::vector<double> g;  // p - y
  std::vector<double> h;  // p (1 - p)
};

inline GradHess log_loss_grad_hess(std::span<const double> margins, std::span<const int> labels) {
  GradHess gh;
  gh.g.reserve(margins.size());
  gh.h.reserve(margins.size());
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double p = sigmoid(margins[i]);
    gh.g.push_back(p - static_cast<double>(labels[i]));
    gh.h.push_back(p * (1.0 - p));
  }
  return gh;
}

struct TreeParams {
  unsigned max_depth = 3;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
};

/// G^2 / (H + lambda), or 0 when the denominator vanishes.
inline double structure_score(double G, double H, double lambda) {
  const double denom = H + lambda;
  return denom > 0.0 ? G * G / denom : 0.0;
}

inline double leaf_weight(double G, double H, double lambda) {
  const double denom = H + lambda;
  return denom > 0.0 ? -G / denom : 0.0;
}

inline double split_gain(double GL, double HL, double GR, double HR, double lambda, double gamma) {
  return 0.5 * (structure_score(GL, HL, lambda) + structure_score(GR, HR, lambda) -
                structure_score(GL + GR, HL + HR, lambda)) -
         gamma;
}

/// Gains closer than this are equal, and a split must beat it to count as
/// positive. It scales with the parent's structure score so that rounding
/// noise from different summation orders cannot pick a winner.
inline double gain_tolerance(double G, double H, double lambda) {
  return 1e-12 * (1.0 + structure_score(G, H, lambda));
}

/// Threshold between consecutive distinct values a < b, always in (a, b].
inline double split_threshold(double a, double b) {
  const double mid = (a + b) / 2.0;
  return mid > a ? mid : b;
}

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Exact greedy search over every feature and every midpoint between
/// consecutive distinct values of `rows`. Returns nothing when no admissible
/// split has positive gain. Ties go to the lowest feature, then threshold.
inline std::optional<SplitCandidate> best_split(const FeatureMatrix& m, const GradHess& gh,
                                                std::span<const std::size_t> rows, const TreeParams& p) {
  double G = 0.0;
  double H = 0.0;
  for (auto r : rows) {
    G += gh.g[r];
    H += gh.h[r];
  }
  const double tol = gain_tolerance(G, H, p.lambda);

  std::optional<SplitCandidate> best;
  std::vector<std::size_t> order(rows.begin(), rows.end());
  for (std::size_t f = 0; f < m.cols; ++f) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return m.at(a, f) < m.at(b, f); });
    double GL = 0.0;
    double HL = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      GL += gh.g[order[i]];
      HL += gh.h[order[i]];
      const double lo = m.at(order[i], f);
      const double hi = m.at(order[i + 1], f);
      if (!(lo < hi)) continue;
      const double HR = H - HL;
      if (HL < p.min_child_weight || HR < p.min_child_weight) continue;
      const double gain = split_gain(GL, HL, G - GL, HR, p.lambda, p.gamma);
      const double bar = best ? best->gain + tol : tol;
      if (gain > bar) best = SplitCandidate{static_cast<int>(f), split_threshold(lo, hi), gain};
    }
  }
  return best;
}

namespace detail {

inline int grow(Tree& tree, const FeatureMatrix& m, const GradHess& gh, std::vector<std::size_t> rows,
                unsigned depth, const TreeParams& p) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  std::optional<SplitCandidate> split;
  if (depth < p.max_depth && rows.size() >= 2) split = best_split(m, gh, rows, p);
  if (!split) {
    double G = 0.0;
    double H = 0.0;
    for (auto r : rows) {
      G += gh.g[r];
      H += gh.h[r];
    }
    tree.nodes[static_cast<std::size_t>(id)].weight = leaf_weight(G, H, p.lambda);
    return id;
  }

  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  for (auto r : rows) {
    (m.at(r, static_cast<std::size_t>(split->feature)) < split->threshold ? left : right).push_back(r);
  }
  rows.clear();
  rows.shrink_to_fit();
  const int l = grow(tree, m, gh, std::move(left), depth + 1, p);
  const int r = grow(tree, m, gh, std::move(right), depth + 1, p);
  auto& node = tree.nodes[static_cast<std::size_t>(id)];
  node.feature = split->feature;
  node.threshold = split->threshold;
  node.left = l;
  node.right = r;
  return id;
}

}  // namespace detail

/// Fit one regression tree to (g, h) over all rows of `m`. Leaf weights are
/// the unshrunk optimum -G / (H + lambda).
inline Tree fit_tree(const FeatureMatrix& m, const GradHess& gh, const TreeParams& p) {
  if (m.rows == 0) throw Error(ErrorKind::EmptyNode, "tree root has zero rows");
  if (p.max_depth < 1) throw Error(ErrorKind::BadHyperparameter, "max_depth must be at least 1");
  std::vector<std::size_t> rows(m.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Tree tree;
  detail::grow(tree, m, gh, std::move(rows), 0, p);
  return tree;
}

struct BoostConfig {
  BoostMode mode = BoostMode::SecondOrder;
  unsigned n_rounds = 200;
  double learning_rate = 0.1;
  unsigned max_depth = 3;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;

  friend bool operator==(const BoostConfig&, const BoostConfig&) = default;
};

struct BoostedEnsemble {
  BoostMode mode = BoostMode::SecondOrder;
  double base_score = 0.0;
  std::vector<Tree> trees;  // leaf weights already multiplied by learning_rate
  double learning_rate = 0.1;
  double lambda = 0.0;
  double gamma = 0.0;
  unsigned max_depth = 3;
  unsigned n_rounds = 0;
  double min_child_weight = 0.0;
  std::size_t features = 0;

  friend bool operator==(const BoostedEnsemble&, const BoostedEnsemble&) = default;
};

inline void validate(const BoostConfig& c) {
  auto bad = [](const std::string& what) { return Error(ErrorKind::BadHyperparameter, what); };
  if (c.n_rounds < 1) throw bad("n_rounds must be at least 1");
  if (!(c.learning_rate > 0.0 && c.learning_rate <= 1.0)) throw bad("learning_rate must lie in (0, 1]");
  if (c.max_depth < 1) throw bad("max_depth must be at least 1");
  if (!(c.lambda >= 0.0)) throw bad("lambda must be non-negative");
  if (!(c.gamma >= 0.0)) throw bad("gamma must be non-negative");
  if (!(c.min_child_weight >= 0.0)) throw bad("min_child_weight must be non-negative");
}

inline double predict_margin(const BoostedEnsemble& e, std::span<const double> x) {
  if (x.size() != e.features) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected " + std::to_string(e.features) + " features, got " + std::to_string(x.size()));
  }
  double margin = e.base_score;
  for (const auto& t : e.trees) margin += t.route(x);
  return margin;
}

inline double predict_proba_boosted(const BoostedEnsemble& e, std::span<const double> x) {
  return clamp_probability(sigmoid(predict_margin(e, x)));
}

/// Mean clamped log-loss of the ensemble over `m`.
inline double log_loss(const BoostedEnsemble& e, const FeatureMatrix& m) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) total += bce(sigmoid(predict_margin(e, m.row(i))), m.labels[i]);
  return total / static_cast<double>(m.rows);
}

/// Newton boosting on binary log-loss. FirstOrder runs the same machinery
/// with lambda = gamma = 0. Stops early once a round produces a bare root
/// leaf with negligible weight.
inline BoostedEnsemble fit_boosted(const FeatureMatrix& m, BoostConfig config) {
  validate(config);
  const auto counts = m.class_counts();
  if (counts[0] == 0 || counts[1] == 0) throw Error(ErrorKind::SingleClassDataset, "boosting needs both classes");
  if (config.mode == BoostMode::FirstOrder) {
    config.lambda = 0.0;
    config.gamma = 0.0;
  }

  BoostedEnsemble e;
  e.mode = config.mode;
  e.learning_rate = config.learning_rate;
  e.lambda = config.lambda;
  e.gamma = config.gamma;
  e.max_depth = config.max_depth;
  e.n_rounds = config.n_rounds;
  e.min_child_weight = config.min_child_weight;
  e.features = m.cols;
  const double pbar = static_cast<double>(counts[1]) / static_cast<double>(m.rows);
  e.base_score = std::log(pbar / (1.0 - pbar));

  const TreeParams tp{config.max_depth, config.lambda, config.gamma, config.min_child_weight};
  std::vector<double> margins(m.rows, e.base_score);
  for (unsigned round = 0; round < config.n_rounds; ++round) {
    const auto gh = log_loss_grad_hess(margins, m.labels);
    Tree tree = fit_tree(m, gh, tp);
    if (tree.nodes.size() == 1 && std::abs(tree.nodes[0].weight) < 1e-12) break;
    for (auto& node : tree.nodes) {
      if (node.is_leaf()) node.weight *= config.learning_rate;
    }
    for (std::size_t i = 0; i < m.rows; ++i) margins[i] += tree.route(m.row(i));
    e.trees.push_back(std::move(tree));
  }
  return e;
}

}  // namespace heartml

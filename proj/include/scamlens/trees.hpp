#pragma once

// CART trees, random forests, extremely randomized trees, multinomial
// gradient boosting, and Gini-decrease feature importance.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scamlens/error.hpp"
#include "scamlens/rng.hpp"
#include "scamlens/table.hpp"

namespace scamlens::trees {

/// 1 - sum_k p_k^2 over the class proportions.
inline double gini_index(const std::array<std::size_t, kNumClasses>& counts) {
  const std::size_t total = counts[0] + counts[1] + counts[2];
  if (total == 0) throw Error("trees", ErrorKind::EmptyNode, "gini of an empty node");
  double sum_sq = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::vector<double> value;  // class distribution, or a single regression value
  std::size_t samples = 0;
  double impurity = 0.0;
  double impurity_decrease = 0.0;  // impurity - weighted child impurity, at this node

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const double> x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)];
  }

  const std::vector<double>& predict(std::span<const double> x) const { return leaf_for(x).value; }

  std::size_t depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].is_leaf()) continue;
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      best = std::max(best, d[i] + 1);
    }
    return best;
  }

  bool operator==(const Tree&) const = default;
};

enum class ThresholdRule { Exhaustive, RandomUniform };

struct TreeConfig {
  int max_depth = -1;  // < 0: unlimited
  std::size_t min_samples_leaf = 1;
  std::optional<std::size_t> max_features;  // nullopt: all features, natural order
  ThresholdRule threshold_rule = ThresholdRule::Exhaustive;
};

inline std::size_t sqrt_features(std::size_t m) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(m)))));
}

namespace detail {

inline constexpr double kMinDecrease = 1e-12;

struct GiniCriterion {
  const std::vector<ScamLabel>* labels;

  using Stats = std::array<std::size_t, kNumClasses>;
  Stats empty() const { return {}; }
  void add(Stats& s, std::size_t i) const { ++s[class_index((*labels)[i])]; }
  void remove(Stats& s, std::size_t i) const { --s[class_index((*labels)[i])]; }
  double impurity(const Stats& s) const { return gini_index(s); }
  std::vector<double> leaf_value(const Stats& s, const std::vector<std::size_t>&) const {
    const double n = static_cast<double>(s[0] + s[1] + s[2]);
    return {static_cast<double>(s[0]) / n, static_cast<double>(s[1]) / n, static_cast<double>(s[2]) / n};
  }
  bool pure(const Stats& s) const { return std::count(s.begin(), s.end(), std::size_t{0}) >= kNumClasses - 1; }
};

/// Squared-error splits on a residual vector; leaf values come from a callback.
template <class LeafFn>
struct VarianceCriterion {
  const std::vector<double>* target;
  LeafFn leaf;

  struct Stats {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;
  };
  Stats empty() const { return {}; }
  void add(Stats& s, std::size_t i) const {
    const double y = (*target)[i];
    s.sum += y;
    s.sum_sq += y * y;
    ++s.n;
  }
  void remove(Stats& s, std::size_t i) const {
    const double y = (*target)[i];
    s.sum -= y;
    s.sum_sq -= y * y;
    --s.n;
  }
  double impurity(const Stats& s) const {
    const double n = static_cast<double>(s.n);
    return std::max(0.0, s.sum_sq / n - (s.sum / n) * (s.sum / n));
  }
  std::vector<double> leaf_value(const Stats&, const std::vector<std::size_t>& idx) const { return {leaf(idx)}; }
  bool pure(const Stats& s) const { return impurity(s) <= 0.0; }
};

template <class Criterion>
class TreeBuilder {
 public:
  TreeBuilder(const std::vector<Row>& rows, Criterion crit, const TreeConfig& cfg, Rng& rng)
      : rows_(rows), crit_(std::move(crit)), cfg_(cfg), rng_(rng), dims_(rows.empty() ? 0 : rows.front().size()) {}

  Tree build(std::vector<std::size_t> samples) {
    Tree tree;
    grow(tree, std::move(samples), 0);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double child_impurity = std::numeric_limits<double>::infinity();
  };

  int grow(Tree& tree, std::vector<std::size_t> samples, int depth) {
    auto stats = crit_.empty();
    for (std::size_t i : samples) crit_.add(stats, i);
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    {
      auto& node = tree.nodes.back();
      node.samples = samples.size();
      node.impurity = crit_.impurity(stats);
      node.value = crit_.leaf_value(stats, samples);
    }

    const bool depth_left = cfg_.max_depth < 0 || depth < cfg_.max_depth;
    if (!depth_left || crit_.pure(stats) || samples.size() < 2 * cfg_.min_samples_leaf) return id;

    const double parent = tree.nodes[static_cast<std::size_t>(id)].impurity;
    const Split best = find_split(samples);
    if (best.feature < 0 || parent - best.child_impurity <= kMinDecrease) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : samples) {
      (rows_[i][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();
    {
      auto& node = tree.nodes[static_cast<std::size_t>(id)];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.impurity_decrease = parent - best.child_impurity;
    }
    const int l = grow(tree, std::move(left), depth + 1);
    const int r = grow(tree, std::move(right), depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  std::vector<std::size_t> candidate_order() {
    std::vector<std::size_t> order(dims_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg_.max_features && *cfg_.max_features < dims_) rng_.shuffle(std::span(order));
    return order;
  }

  Split find_split(const std::vector<std::size_t>& samples) {
    const std::size_t budget = cfg_.max_features ? std::min(*cfg_.max_features, dims_) : dims_;
    Split best;
    std::size_t evaluated = 0;
    std::vector<std::size_t> sorted = samples;
    for (std::size_t f : candidate_order()) {
      if (evaluated >= budget) break;
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return rows_[a][f] < rows_[b][f]; });
      const double lo = rows_[sorted.front()][f];
      const double hi = rows_[sorted.back()][f];
      if (!(lo < hi)) continue;  // constant here; does not use up the budget
      ++evaluated;
      if (cfg_.threshold_rule == ThresholdRule::Exhaustive) {
        exhaustive(sorted, f, best);
      } else {
        random_threshold(sorted, f, lo, hi, best);
      }
    }
    return best;
  }

  void consider(double child_impurity, std::size_t f, double threshold, Split& best) const {
    if (child_impurity < best.child_impurity) best = {static_cast<int>(f), threshold, child_impurity};
  }

  void exhaustive(const std::vector<std::size_t>& sorted, std::size_t f, Split& best) {
    auto left = crit_.empty();
    auto right = crit_.empty();
    for (std::size_t i : sorted) crit_.add(right, i);
    const std::size_t n = sorted.size();
    const double total = static_cast<double>(n);
    for (std::size_t pos = 0; pos + 1 < n; ++pos) {
      crit_.add(left, sorted[pos]);
      crit_.remove(right, sorted[pos]);
      const double a = rows_[sorted[pos]][f];
      const double b = rows_[sorted[pos + 1]][f];
      if (!(a < b)) continue;
      const std::size_t nl = pos + 1;
      if (nl < cfg_.min_samples_leaf || n - nl < cfg_.min_samples_leaf) continue;
      double threshold = a + (b - a) / 2.0;
      if (!(threshold < b)) threshold = a;
      const double weighted = (static_cast<double>(nl) * crit_.impurity(left) +
                               static_cast<double>(n - nl) * crit_.impurity(right)) / total;
      consider(weighted, f, threshold, best);
    }
  }

  void random_threshold(const std::vector<std::size_t>& sorted, std::size_t f, double lo, double hi, Split& best) {
    double threshold = rng_.uniform(lo, hi);
    if (!(threshold < hi)) threshold = lo;
    auto left = crit_.empty();
    auto right = crit_.empty();
    std::size_t nl = 0;
    for (std::size_t i : sorted) {
      if (rows_[i][f] <= threshold) {
        crit_.add(left, i);
        ++nl;
      } else {
        crit_.add(right, i);
      }
    }
    const std::size_t n = sorted.size();
    if (nl < cfg_.min_samples_leaf || n - nl < cfg_.min_samples_leaf || nl == 0 || nl == n) return;
    const double weighted = (static_cast<double>(nl) * crit_.impurity(left) +
                             static_cast<double>(n - nl) * crit_.impurity(right)) / static_cast<double>(n);
    consider(weighted, f, threshold, best);
  }

  const std::vector<Row>& rows_;
  Criterion crit_;
  TreeConfig cfg_;
  Rng& rng_;
  std::size_t dims_;
};

inline int argmax(const std::vector<double>& v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace detail

/// Gini CART on the given sample multiset (duplicates count with multiplicity).
inline Tree grow_tree(const LabeledTable& table, const std::vector<std::size_t>& samples, const TreeConfig& cfg, Rng& rng) {
  if (samples.empty()) throw Error("trees", ErrorKind::TooFewRows, "cannot grow a tree on no samples");
  detail::TreeBuilder builder(table.rows, detail::GiniCriterion{&table.labels}, cfg, rng);
  return builder.build(samples);
}

inline Tree grow_tree(const LabeledTable& table, const TreeConfig& cfg, Rng& rng) {
  std::vector<std::size_t> all(table.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return grow_tree(table, all, cfg, rng);
}

inline ScamLabel predict_tree(const Tree& tree, std::span<const double> x) {
  return label_from_index(detail::argmax(tree.predict(x)));
}

// ---------------------------------------------------------------------------
// Forests

enum class ForestMode { RF, ET };

inline constexpr std::string_view to_string(ForestMode m) noexcept { return m == ForestMode::RF ? "rf" : "et"; }

struct ForestModel {
  ForestMode mode = ForestMode::RF;
  std::vector<Tree> trees;
  std::vector<std::vector<std::size_t>> bootstrap;  // RF only
  std::vector<std::string> feature_names;
  std::size_t max_features = 0;

  bool operator==(const ForestModel&) const = default;
};

struct ForestOptions {
  std::size_t n_trees = 100;
  TreeConfig tree;  // max_features / threshold_rule are set by the trainer unless overridden
  bool identity_bootstrap = false;  // RF: use every row once instead of resampling
  bool all_features = false;
};

namespace detail {

inline ForestModel train_forest(const LabeledTable& table, ForestMode mode, const ForestOptions& opt, std::uint64_t seed) {
  if (table.size() < 2) throw Error("trees", ErrorKind::TooFewRows, "forest needs at least 2 rows");
  if (opt.n_trees < 1) throw Error("trees", ErrorKind::BadInput, "forest needs at least one tree");
  check_shape(table);
  ForestModel model;
  model.mode = mode;
  model.feature_names = table.feature_names;
  TreeConfig cfg = opt.tree;
  cfg.threshold_rule = mode == ForestMode::RF ? ThresholdRule::Exhaustive : ThresholdRule::RandomUniform;
  if (opt.all_features) {
    cfg.max_features.reset();
  } else {
    cfg.max_features = sqrt_features(table.dims());
  }
  model.max_features = cfg.max_features.value_or(table.dims());

  Rng master(seed);
  const std::size_t n = table.size();
  for (std::size_t t = 0; t < opt.n_trees; ++t) {
    Rng rng = master.fork(t);
    std::vector<std::size_t> sample(n);
    if (mode == ForestMode::RF && !opt.identity_bootstrap) {
      for (auto& s : sample) s = rng.index(n);
      std::sort(sample.begin(), sample.end());
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    model.trees.push_back(grow_tree(table, sample, cfg, rng));
    if (mode == ForestMode::RF) model.bootstrap.push_back(std::move(sample));
  }
  return model;
}

}  // namespace detail

inline ForestModel train_random_forest(const LabeledTable& table, const ForestOptions& opt, std::uint64_t seed) {
  return detail::train_forest(table, ForestMode::RF, opt, seed);
}

inline ForestModel train_extra_trees(const LabeledTable& table, const ForestOptions& opt, std::uint64_t seed) {
  return detail::train_forest(table, ForestMode::ET, opt, seed);
}

/// Majority vote over trees; ties go to the lowest class index.
inline ScamLabel predict_forest(const ForestModel& model, std::span<const double> x) {
  std::array<std::size_t, kNumClasses> votes{};
  for (const auto& t : model.trees) ++votes[class_index(predict_tree(t, x))];
  return label_from_index(static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
}

/// Vote shares per class.
inline std::array<double, kNumClasses> forest_vote_shares(const ForestModel& model, std::span<const double> x) {
  std::array<double, kNumClasses> shares{};
  for (const auto& t : model.trees) shares[class_index(predict_tree(t, x))] += 1.0;
  for (double& s : shares) s /= static_cast<double>(model.trees.size());
  return shares;
}

// ---------------------------------------------------------------------------
// Importance

struct Importance {
  std::string feature;
  double vim = 0.0;
  bool operator==(const Importance&) const = default;
};

/// Raw per-feature Gini decrease, weighted by node share of the tree's samples.
inline std::vector<double> gini_decrease_by_feature(const Tree& tree, std::size_t dims) {
  std::vector<double> out(dims, 0.0);
  if (tree.nodes.empty()) return out;
  const double root = static_cast<double>(tree.nodes.front().samples);
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    out[static_cast<std::size_t>(node.feature)] += static_cast<double>(node.samples) / root * node.impurity_decrease;
  }
  return out;
}

/// Importance sorted descending by VIM; equal scores ordered by feature name.
/// Scores are averaged over trees and normalized to sum to 1 (all zero when no tree splits).
inline std::vector<Importance> feature_importance(const ForestModel& model) {
  if (model.trees.empty()) throw Error("trees", ErrorKind::UntrainedModel, "forest has no trees");
  const std::size_t d = model.feature_names.size();
  std::vector<double> total(d, 0.0);
  for (const auto& tree : model.trees) {
    const auto dec = gini_decrease_by_feature(tree, d);
    for (std::size_t j = 0; j < d; ++j) total[j] += dec[j];
  }
  double sum = 0.0;
  for (double& v : total) {
    v /= static_cast<double>(model.trees.size());
    sum += v;
  }
  std::vector<Importance> ranked;
  for (std::size_t j = 0; j < d; ++j) ranked.push_back({model.feature_names[j], sum > 0.0 ? total[j] / sum : 0.0});
  std::sort(ranked.begin(), ranked.end(), [](const Importance& a, const Importance& b) {
    return a.vim != b.vim ? a.vim > b.vim : a.feature < b.feature;
  });
  return ranked;
}

/// `feature,vim` ascending by vim.
inline void write_importance_csv(std::ostream& out, std::vector<Importance> ranked) {
  std::stable_sort(ranked.begin(), ranked.end(), [](const Importance& a, const Importance& b) {
    return a.vim != b.vim ? a.vim < b.vim : a.feature < b.feature;
  });
  out << "feature,vim\n";
  for (const auto& r : ranked) out << r.feature << ',' << csv::format_value(r.vim) << '\n';
}

// ---------------------------------------------------------------------------
// Gradient boosting (multinomial deviance, one regression tree per class per stage)

struct GbOptions {
  std::size_t n_stages = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  std::size_t min_samples_leaf = 1;
};

struct GbModel {
  std::array<double, kNumClasses> initial{};  // log class priors
  std::vector<std::array<Tree, kNumClasses>> stages;
  std::vector<double> stage_scale;  // 1 unless the deviance safeguard shortened the step
  double learning_rate = 0.1;
  std::vector<double> train_deviance;  // after init and after each stage
  std::size_t dims = 0;

  bool operator==(const GbModel&) const = default;
};

inline std::array<double, kNumClasses> softmax3(const std::array<double, kNumClasses>& s) {
  const double m = std::max({s[0], s[1], s[2]});
  std::array<double, kNumClasses> p{};
  double sum = 0.0;
  for (int k = 0; k < kNumClasses; ++k) sum += p[k] = std::exp(s[k] - m);
  for (double& v : p) v /= sum;
  return p;
}

inline double multinomial_deviance(const std::vector<std::array<double, kNumClasses>>& scores,
                                   const std::vector<ScamLabel>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    const double m = std::max({s[0], s[1], s[2]});
    const double lse = m + std::log(std::exp(s[0] - m) + std::exp(s[1] - m) + std::exp(s[2] - m));
    total += lse - s[class_index(labels[i])];
  }
  return total / static_cast<double>(scores.size());
}

inline std::array<double, kNumClasses> gb_scores(const GbModel& model, std::span<const double> x) {
  auto s = model.initial;
  for (std::size_t m = 0; m < model.stages.size(); ++m) {
    const double step = model.learning_rate * model.stage_scale[m];
    for (int k = 0; k < kNumClasses; ++k) s[k] += step * model.stages[m][k].predict(x)[0];
  }
  return s;
}

inline std::array<double, kNumClasses> gb_predict_proba(const GbModel& model, std::span<const double> x) {
  return softmax3(gb_scores(model, x));
}

inline ScamLabel gb_predict(const GbModel& model, std::span<const double> x) {
  const auto p = gb_predict_proba(model, x);
  return label_from_index(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
}

inline GbModel train_gradient_boosting(const LabeledTable& table, const GbOptions& opt, std::uint64_t seed) {
  if (table.size() < 2) throw Error("trees", ErrorKind::TooFewRows, "boosting needs at least 2 rows");
  if (!(opt.learning_rate > 0.0)) throw Error("trees", ErrorKind::BadInput, "learning rate must be positive");
  check_shape(table);
  const std::size_t n = table.size();
  GbModel model;
  model.learning_rate = opt.learning_rate;
  model.dims = table.dims();
  const auto counts = table.class_counts();
  for (int k = 0; k < kNumClasses; ++k) {
    const double prior = static_cast<double>(counts[k]) / static_cast<double>(n);
    model.initial[k] = std::log(std::max(prior, 1e-12));
  }

  std::vector<std::array<double, kNumClasses>> scores(n, model.initial);
  double deviance = multinomial_deviance(scores, table.labels);
  model.train_deviance.push_back(deviance);

  Rng rng(seed);
  TreeConfig cfg;
  cfg.max_depth = opt.max_depth;
  cfg.min_samples_leaf = opt.min_samples_leaf;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  constexpr double kNewtonScale = (kNumClasses - 1.0) / kNumClasses;

  for (std::size_t stage = 0; stage < opt.n_stages; ++stage) {
    std::array<std::vector<double>, kNumClasses> residual;
    for (auto& r : residual) r.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = softmax3(scores[i]);
      for (int k = 0; k < kNumClasses; ++k) residual[k][i] = (class_index(table.labels[i]) == k ? 1.0 : 0.0) - p[k];
    }
    std::array<Tree, kNumClasses> trees;
    for (int k = 0; k < kNumClasses; ++k) {
      const auto& r = residual[k];
      // one Newton step per leaf
      auto leaf = [&r](const std::vector<std::size_t>& idx) {
        double num = 0.0, den = 0.0;
        for (std::size_t i : idx) {
          num += r[i];
          den += std::abs(r[i]) * (1.0 - std::abs(r[i]));
        }
        return den > 1e-12 ? kNewtonScale * num / den : 0.0;
      };
      detail::TreeBuilder builder(table.rows, detail::VarianceCriterion<decltype(leaf)>{&r, leaf}, cfg, rng);
      trees[k] = builder.build(all);
    }
    std::vector<std::array<double, kNumClasses>> delta(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < kNumClasses; ++k) delta[i][k] = trees[k].predict(table.rows[i])[0];
    }
    // halve the step until the training deviance does not increase
    double scale = 1.0;
    std::vector<std::array<double, kNumClasses>> candidate(n);
    double next = deviance;
    for (int attempt = 0; attempt < 40; ++attempt) {
      const double step = opt.learning_rate * scale;
      for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < kNumClasses; ++k) candidate[i][k] = scores[i][k] + step * delta[i][k];
      }
      next = multinomial_deviance(candidate, table.labels);
      if (next <= deviance) break;
      scale *= 0.5;
    }
    if (next > deviance) {
      scale = 0.0;
      candidate = scores;
      next = deviance;
    }
    scores = std::move(candidate);
    deviance = next;
    model.stages.push_back(std::move(trees));
    model.stage_scale.push_back(scale);
    model.train_deviance.push_back(deviance);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json tree_to_json(const Tree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"value", n.value},
                     {"samples", n.samples},
                     {"impurity", n.impurity},
                     {"impurity_decrease", n.impurity_decrease}});
  }
  return nodes;
}

inline Tree tree_from_json(const nlohmann::json& j) {
  Tree t;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.value = n.at("value").get<std::vector<double>>();
    node.samples = n.at("samples").get<std::size_t>();
    node.impurity = n.at("impurity").get<double>();
    node.impurity_decrease = n.at("impurity_decrease").get<double>();
    t.nodes.push_back(std::move(node));
  }
  const auto size = static_cast<int>(t.nodes.size());
  for (const auto& n : t.nodes) {
    if (!n.is_leaf() && (n.left <= 0 || n.left >= size || n.right <= 0 || n.right >= size)) {
      throw Error("trees", ErrorKind::BadInput, "tree node refers outside the tree");
    }
  }
  if (t.nodes.empty()) throw Error("trees", ErrorKind::BadInput, "empty tree");
  return t;
}

inline nlohmann::json to_json(const ForestModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
  return {{"kind", std::string(to_string(m.mode))},
          {"feature_names", m.feature_names},
          {"max_features", m.max_features},
          {"trees", std::move(trees)}};
}

inline ForestModel forest_from_json(const nlohmann::json& j) {
  ForestModel m;
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "rf" && kind != "et") throw Error("trees", ErrorKind::BadInput, "not a forest checkpoint: " + kind);
  m.mode = kind == "rf" ? ForestMode::RF : ForestMode::ET;
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.max_features = j.at("max_features").get<std::size_t>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  return m;
}

inline nlohmann::json to_json(const GbModel& m) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : m.stages) stages.push_back({tree_to_json(s[0]), tree_to_json(s[1]), tree_to_json(s[2])});
  return {{"kind", "gb"},
          {"initial", m.initial},
          {"learning_rate", m.learning_rate},
          {"stage_scale", m.stage_scale},
          {"dims", m.dims},
          {"train_deviance", m.train_deviance},
          {"stages", std::move(stages)}};
}

inline GbModel gb_from_json(const nlohmann::json& j) {
  if (j.at("kind").get<std::string>() != "gb") throw Error("trees", ErrorKind::BadInput, "not a boosting checkpoint");
  GbModel m;
  m.initial = j.at("initial").get<std::array<double, kNumClasses>>();
  m.learning_rate = j.at("learning_rate").get<double>();
  m.stage_scale = j.at("stage_scale").get<std::vector<double>>();
  m.dims = j.at("dims").get<std::size_t>();
  m.train_deviance = j.at("train_deviance").get<std::vector<double>>();
  for (const auto& s : j.at("stages")) m.stages.push_back({tree_from_json(s[0]), tree_from_json(s[1]), tree_from_json(s[2])});
  if (m.stage_scale.size() != m.stages.size()) throw Error("trees", ErrorKind::BadInput, "stage_scale length mismatch");
  return m;
}

}  // namespace scamlens::trees

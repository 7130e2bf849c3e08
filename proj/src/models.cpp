#include "drivestyle/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace drivestyle {

namespace {

constexpr double kMinGain = 1e-12;

std::vector<double> softmax(std::vector<double> m) {
  double mx = *std::max_element(m.begin(), m.end());
  double sum = 0.0;
  for (double& v : m) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : m) v /= sum;
  return m;
}

int infer_n_classes(const std::vector<int>& y) {
  int k = 0;
  for (int v : y) {
    if (v < 0) throw std::invalid_argument("labels must be non-negative");
    k = std::max(k, v + 1);
  }
  return k;
}

// Candidate feature subset for one node: first `count` entries of a partial
// Fisher-Yates shuffle, or all features when count covers them.
std::vector<int> sample_features(int n_features, int count, Rng& rng) {
  std::vector<int> all(n_features);
  std::iota(all.begin(), all.end(), 0);
  if (count >= n_features) return all;
  for (int i = 0; i < count; ++i) {
    int j = i + static_cast<int>(rng.below(n_features - i));
    std::swap(all[i], all[j]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());  // lower-index tie break stays meaningful
  return all;
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

double gini(const std::vector<double>& counts, double total) {
  double g = 1.0;
  for (double c : counts) {
    double p = c / total;
    g -= p * p;
  }
  return g;
}

// Shared CART builder. For classification, targets are one-hot counts per
// class; for regression, a single accumulated (sum, sum of squares) pair.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, int max_depth, int min_samples_leaf,
              int features_per_split, Rng& rng)
      : X_(X),
        min_leaf_(std::max(1, min_samples_leaf)),
        max_depth_(max_depth),
        features_per_split_(features_per_split),
        rng_(rng) {}

  virtual ~TreeBuilder() = default;

  Tree build(std::vector<int> indices) {
    Tree tree;
    build_node(tree, std::move(indices), 0);
    return tree;
  }

 protected:
  virtual double node_impurity(const std::vector<int>& idx) const = 0;
  // Impurity of a candidate split, scanned incrementally by the subclass.
  virtual SplitChoice best_split(const std::vector<int>& idx,
                                 const std::vector<int>& features,
                                 double parent_impurity) const = 0;
  virtual std::vector<double> leaf_value(const std::vector<int>& idx) const = 0;
  virtual bool is_pure(const std::vector<int>& idx) const = 0;

  const Matrix& X_;
  int min_leaf_;

 private:
  int build_node(Tree& tree, std::vector<int> indices, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_id].cover = static_cast<double>(indices.size());

    bool make_leaf = depth >= max_depth_ || is_pure(indices) ||
                     static_cast<int>(indices.size()) < 2 * min_leaf_;
    SplitChoice choice;
    if (!make_leaf) {
      const int m = static_cast<int>(X_[0].size());
      const int count = features_per_split_ > 0
                            ? std::min(features_per_split_, m)
                            : m;
      auto features = sample_features(m, count, rng_);
      choice = best_split(indices, features, node_impurity(indices));
      if (!choice.found) make_leaf = true;
    }

    if (make_leaf) {
      tree.nodes[node_id].value = leaf_value(indices);
      return node_id;
    }

    std::vector<int> left_idx, right_idx;
    for (int i : indices) {
      if (X_[i][choice.feature] <= choice.threshold)
        left_idx.push_back(i);
      else
        right_idx.push_back(i);
    }
    indices.clear();
    indices.shrink_to_fit();

    tree.nodes[node_id].feature = choice.feature;
    tree.nodes[node_id].threshold = choice.threshold;
    const int left = build_node(tree, std::move(left_idx), depth + 1);
    tree.nodes[node_id].left = left;
    const int right = build_node(tree, std::move(right_idx), depth + 1);
    tree.nodes[node_id].right = right;
    return node_id;
  }

  int max_depth_;
  int features_per_split_;
  Rng& rng_;
};

class ClassificationTreeBuilder : public TreeBuilder {
 public:
  ClassificationTreeBuilder(const Matrix& X, const std::vector<int>& y,
                            int n_classes, const TreeFitParams& p, Rng& rng)
      : TreeBuilder(X, p.max_depth, p.min_samples_leaf, p.features_per_split,
                    rng),
        y_(y),
        n_classes_(n_classes) {}

 protected:
  double node_impurity(const std::vector<int>& idx) const override {
    std::vector<double> counts(n_classes_, 0.0);
    for (int i : idx) counts[y_[i]] += 1.0;
    return gini(counts, static_cast<double>(idx.size()));
  }

  bool is_pure(const std::vector<int>& idx) const override {
    for (std::size_t i = 1; i < idx.size(); ++i)
      if (y_[idx[i]] != y_[idx[0]]) return false;
    return true;
  }

  std::vector<double> leaf_value(const std::vector<int>& idx) const override {
    std::vector<double> counts(n_classes_, 0.0);
    for (int i : idx) counts[y_[i]] += 1.0;
    for (double& c : counts) c /= static_cast<double>(idx.size());
    return counts;
  }

  SplitChoice best_split(const std::vector<int>& idx,
                         const std::vector<int>& features,
                         double parent_impurity) const override {
    SplitChoice best;
    const double n = static_cast<double>(idx.size());
    std::vector<std::pair<double, int>> sorted(idx.size());

    for (int f : features) {
      for (std::size_t i = 0; i < idx.size(); ++i)
        sorted[i] = {X_[idx[i]][f], y_[idx[i]]};
      std::sort(sorted.begin(), sorted.end());

      std::vector<double> left_counts(n_classes_, 0.0);
      std::vector<double> right_counts(n_classes_, 0.0);
      for (const auto& [v, label] : sorted) right_counts[label] += 1.0;

      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_counts[sorted[i].second] += 1.0;
        right_counts[sorted[i].second] -= 1.0;
        if (sorted[i].first == sorted[i + 1].first) continue;
        const int n_left = static_cast<int>(i + 1);
        const int n_right = static_cast<int>(sorted.size()) - n_left;
        if (n_left < min_leaf_ || n_right < min_leaf_) continue;
        const double weighted = (n_left * gini(left_counts, n_left) +
                                 n_right * gini(right_counts, n_right)) /
                                n;
        const double gain = parent_impurity - weighted;
        if (gain > kMinGain && (!best.found || gain > best.gain)) {
          best.found = true;
          best.feature = f;
          best.threshold = (sorted[i].first + sorted[i + 1].first) / 2.0;
          best.gain = gain;
        }
      }
    }
    return best;
  }

 private:
  const std::vector<int>& y_;
  int n_classes_;
};

class RegressionTreeBuilder : public TreeBuilder {
 public:
  RegressionTreeBuilder(const Matrix& X, const std::vector<double>& targets,
                        int max_depth, int min_samples_leaf, Rng& rng)
      : TreeBuilder(X, max_depth, min_samples_leaf, 0, rng),
        targets_(targets) {}

 protected:
  double node_impurity(const std::vector<int>& idx) const override {
    double sum = 0.0, sq = 0.0;
    for (int i : idx) {
      sum += targets_[i];
      sq += targets_[i] * targets_[i];
    }
    const double n = static_cast<double>(idx.size());
    return sq - sum * sum / n;  // total squared error
  }

  bool is_pure(const std::vector<int>& idx) const override {
    for (std::size_t i = 1; i < idx.size(); ++i)
      if (targets_[idx[i]] != targets_[idx[0]]) return false;
    return true;
  }

  std::vector<double> leaf_value(const std::vector<int>& idx) const override {
    double sum = 0.0;
    for (int i : idx) sum += targets_[i];
    return {sum / static_cast<double>(idx.size())};
  }

  SplitChoice best_split(const std::vector<int>& idx,
                         const std::vector<int>& features,
                         double parent_impurity) const override {
    SplitChoice best;
    std::vector<std::pair<double, double>> sorted(idx.size());

    for (int f : features) {
      for (std::size_t i = 0; i < idx.size(); ++i)
        sorted[i] = {X_[idx[i]][f], targets_[idx[i]]};
      std::sort(sorted.begin(), sorted.end());

      double left_sum = 0.0, left_sq = 0.0;
      double right_sum = 0.0, right_sq = 0.0;
      for (const auto& [v, t] : sorted) {
        right_sum += t;
        right_sq += t * t;
      }

      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const double t = sorted[i].second;
        left_sum += t;
        left_sq += t * t;
        right_sum -= t;
        right_sq -= t * t;
        if (sorted[i].first == sorted[i + 1].first) continue;
        const int n_left = static_cast<int>(i + 1);
        const int n_right = static_cast<int>(sorted.size()) - n_left;
        if (n_left < min_leaf_ || n_right < min_leaf_) continue;
        const double sse_left = left_sq - left_sum * left_sum / n_left;
        const double sse_right = right_sq - right_sum * right_sum / n_right;
        const double gain = parent_impurity - (sse_left + sse_right);
        if (gain > kMinGain && (!best.found || gain > best.gain)) {
          best.found = true;
          best.feature = f;
          best.threshold = (sorted[i].first + sorted[i + 1].first) / 2.0;
          best.gain = gain;
        }
      }
    }
    return best;
  }

 private:
  const std::vector<double>& targets_;
};

void check_training_input(const Matrix& X, std::size_t n_labels) {
  if (X.empty() || n_labels == 0)
    throw std::invalid_argument("fit: empty training data");
  if (X.size() != n_labels)
    throw std::invalid_argument("fit: X and y size mismatch");
  const std::size_t m = X[0].size();
  if (m == 0) throw std::invalid_argument("fit: zero-dimensional features");
  for (const auto& row : X)
    if (row.size() != m)
      throw std::invalid_argument("fit: ragged feature matrix");
}

}  // namespace

const TreeNode& Tree::leaf_for(const std::vector<double>& x) const {
  int i = 0;
  while (!nodes[i].is_leaf())
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                  : nodes[i].right;
  return nodes[i];
}

int Tree::depth() const {
  // Iterative depth over the flat layout.
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int d = 0;
  while (!stack.empty()) {
    auto [i, depth] = stack.back();
    stack.pop_back();
    d = std::max(d, depth);
    if (!nodes[i].is_leaf()) {
      stack.push_back({nodes[i].left, depth + 1});
      stack.push_back({nodes[i].right, depth + 1});
    }
  }
  return d;
}

void TreeEnsemble::validate() const {
  if (trees.empty()) throw SchemaError("ensemble: no trees");
  if (n_classes <= 0) throw SchemaError("ensemble: n_classes must be positive");
  if (static_cast<int>(base_score.size()) != n_classes)
    throw SchemaError("ensemble: base_score size mismatch");
  for (const auto& tree : trees) {
    if (tree.nodes.empty()) throw SchemaError("ensemble: empty tree");
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) {
        if (static_cast<int>(node.value.size()) != n_classes)
          throw SchemaError("ensemble: leaf value size mismatch");
      } else {
        if (node.feature < 0 || node.feature >= n_features)
          throw SchemaError("ensemble: split feature out of range");
        if (node.left < 0 || node.right < 0 ||
            node.left >= static_cast<int>(tree.nodes.size()) ||
            node.right >= static_cast<int>(tree.nodes.size()))
          throw SchemaError("ensemble: child index out of range");
      }
    }
  }
}

std::vector<double> TreeEnsemble::margins(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != n_features)
    throw std::invalid_argument("predict: feature dimension mismatch");
  std::vector<double> out(base_score);
  if (kind == EnsembleKind::kForest)
    std::fill(out.begin(), out.end(), 0.0);
  for (const auto& tree : trees) {
    const auto& leaf = tree.leaf_for(x);
    for (int k = 0; k < n_classes; ++k) out[k] += leaf.value[k];
  }
  if (kind == EnsembleKind::kForest)
    for (double& v : out) v /= static_cast<double>(trees.size());
  return out;
}

std::vector<double> TreeEnsemble::predict_proba(
    const std::vector<double>& x) const {
  auto m = margins(x);
  if (kind == EnsembleKind::kBoosted) return softmax(std::move(m));
  return m;
}

int TreeEnsemble::predict(const std::vector<double>& x) const {
  auto p = predict_proba(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<double> LinearModel::margins(const std::vector<double>& x) const {
  if (x.size() != feat_mean.size())
    throw std::invalid_argument("predict: feature dimension mismatch");
  std::vector<double> out(n_classes, 0.0);
  for (int c = 0; c < n_classes; ++c) {
    double m = bias[c];
    for (std::size_t j = 0; j < x.size(); ++j)
      m += weights[c][j] * (x[j] - feat_mean[j]) / feat_std[j];
    out[c] = m;
  }
  return out;
}

std::vector<double> LinearModel::predict_proba(
    const std::vector<double>& x) const {
  return softmax(margins(x));
}

int LinearModel::predict(const std::vector<double>& x) const {
  auto m = margins(x);
  return static_cast<int>(std::max_element(m.begin(), m.end()) - m.begin());
}

std::vector<double> predict_proba(const Model& model,
                                  const std::vector<double>& x) {
  return std::visit([&](const auto& m) { return m.predict_proba(x); }, model);
}

int predict(const Model& model, const std::vector<double>& x) {
  return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

int model_n_features(const Model& model) {
  if (const auto* e = std::get_if<TreeEnsemble>(&model)) return e->n_features;
  return static_cast<int>(std::get<LinearModel>(model).feat_mean.size());
}

int model_n_classes(const Model& model) {
  if (const auto* e = std::get_if<TreeEnsemble>(&model)) return e->n_classes;
  return std::get<LinearModel>(model).n_classes;
}

Tree fit_tree(const Matrix& X, const std::vector<int>& y,
              const TreeFitParams& params) {
  check_training_input(X, y.size());
  if (params.max_depth < 0)
    throw std::invalid_argument("fit_tree: max_depth must be >= 0");
  const int n_classes = infer_n_classes(y);
  Rng rng(derive_seed(params.seed, 0x73EEULL));
  ClassificationTreeBuilder builder(X, y, n_classes, params, rng);
  std::vector<int> idx(X.size());
  std::iota(idx.begin(), idx.end(), 0);
  return builder.build(std::move(idx));
}

TreeEnsemble fit_forest(const Matrix& X, const std::vector<int>& y,
                        const ForestFitParams& params) {
  check_training_input(X, y.size());
  if (params.n_trees <= 0)
    throw std::invalid_argument("fit_forest: n_trees must be positive");

  const int n = static_cast<int>(X.size());
  const int m = static_cast<int>(X[0].size());
  const int n_classes = infer_n_classes(y);

  TreeFitParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_samples_leaf = params.min_samples_leaf;
  tree_params.features_per_split =
      params.features_per_split > 0
          ? params.features_per_split
          : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));

  TreeEnsemble ens;
  ens.kind = EnsembleKind::kForest;
  ens.n_classes = n_classes;
  ens.n_features = m;
  ens.base_score.assign(n_classes, 0.0);
  ens.trees.reserve(params.n_trees);

  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, 0xF0135ULL, static_cast<std::uint64_t>(t)));
    std::vector<int> idx;
    idx.reserve(n);
    if (params.bootstrap) {
      for (int i = 0; i < n; ++i)
        idx.push_back(static_cast<int>(rng.below(n)));
      std::sort(idx.begin(), idx.end());
    } else {
      idx.resize(n);
      std::iota(idx.begin(), idx.end(), 0);
    }
    ClassificationTreeBuilder builder(X, y, n_classes, tree_params, rng);
    ens.trees.push_back(builder.build(std::move(idx)));
  }
  return ens;
}

TreeEnsemble fit_gbt(const Matrix& X, const std::vector<int>& y,
                     const GbtFitParams& params,
                     std::vector<double>* loss_curve) {
  check_training_input(X, y.size());
  if (params.n_rounds <= 0 || params.learning_rate <= 0.0 ||
      params.max_depth < 0)
    throw std::invalid_argument("fit_gbt: invalid hyperparameters");

  const int n = static_cast<int>(X.size());
  const int n_classes = infer_n_classes(y);
  if (n_classes < 2)
    throw std::invalid_argument("fit_gbt: need at least two classes");

  TreeEnsemble ens;
  ens.kind = EnsembleKind::kBoosted;
  ens.n_classes = n_classes;
  ens.n_features = static_cast<int>(X[0].size());
  ens.base_score.assign(n_classes, 0.0);
  for (int i = 0; i < n; ++i) ens.base_score[y[i]] += 1.0;
  for (double& b : ens.base_score)
    b = std::log(std::max(b / static_cast<double>(n), 1e-12));

  Matrix margins(n, ens.base_score);
  std::vector<int> all_idx(n);
  std::iota(all_idx.begin(), all_idx.end(), 0);
  std::vector<double> residual(n);

  if (loss_curve) loss_curve->clear();

  for (int round = 0; round < params.n_rounds; ++round) {
    Matrix probs(n);
    for (int i = 0; i < n; ++i) probs[i] = softmax(margins[i]);

    for (int k = 0; k < n_classes; ++k) {
      for (int i = 0; i < n; ++i)
        residual[i] = (y[i] == k ? 1.0 : 0.0) - probs[i][k];

      Rng rng(derive_seed(params.seed, 0x6B7ULL,
                          static_cast<std::uint64_t>(round * n_classes + k)));
      RegressionTreeBuilder builder(X, residual, params.max_depth,
                                    params.min_samples_leaf, rng);
      Tree tree = builder.build(all_idx);

      // Scale leaves by the learning rate and expand to per-class vectors so
      // boosted prediction is a plain sum over trees.
      for (auto& node : tree.nodes) {
        if (!node.is_leaf()) continue;
        const double step = params.learning_rate * node.value[0];
        node.value.assign(n_classes, 0.0);
        node.value[k] = step;
      }
      for (int i = 0; i < n; ++i)
        margins[i][k] += tree.leaf_for(X[i]).value[k];
      ens.trees.push_back(std::move(tree));
    }

    if (loss_curve) {
      double loss = 0.0;
      for (int i = 0; i < n; ++i) {
        auto p = softmax(margins[i]);
        loss -= std::log(std::max(p[y[i]], 1e-300));
      }
      loss_curve->push_back(loss / static_cast<double>(n));
    }
  }
  return ens;
}

LinearModel fit_linear_svm(const Matrix& X, const std::vector<int>& y,
                           const SvmFitParams& params) {
  check_training_input(X, y.size());
  if (params.lambda <= 0.0 || params.epochs <= 0)
    throw std::invalid_argument("fit_linear_svm: invalid hyperparameters");

  const int n = static_cast<int>(X.size());
  const int m = static_cast<int>(X[0].size());
  const int n_classes = infer_n_classes(y);
  if (n_classes < 2)
    throw std::invalid_argument("fit_linear_svm: single-class input");

  LinearModel model;
  model.n_classes = n_classes;
  model.feat_mean.assign(m, 0.0);
  model.feat_std.assign(m, 0.0);
  for (const auto& row : X)
    for (int j = 0; j < m; ++j) model.feat_mean[j] += row[j];
  for (double& v : model.feat_mean) v /= n;
  for (const auto& row : X)
    for (int j = 0; j < m; ++j) {
      const double d = row[j] - model.feat_mean[j];
      model.feat_std[j] += d * d;
    }
  for (double& v : model.feat_std) {
    v = std::sqrt(v / n);
    if (v == 0.0) v = 1.0;  // constant feature: standardized to all zeros
  }

  Matrix Z(n, std::vector<double>(m));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      Z[i][j] = (X[i][j] - model.feat_mean[j]) / model.feat_std[j];

  model.weights.assign(n_classes, std::vector<double>(m, 0.0));
  model.bias.assign(n_classes, 0.0);

  const long long total_steps = static_cast<long long>(params.epochs) * n;
  for (int c = 0; c < n_classes; ++c) {
    Rng rng(derive_seed(params.seed, 0x5F9ULL, static_cast<std::uint64_t>(c)));
    auto& w = model.weights[c];
    double& b = model.bias[c];
    for (long long t = 1; t <= total_steps; ++t) {
      const int i = static_cast<int>(rng.below(n));
      const double label = y[i] == c ? 1.0 : -1.0;
      const double eta = 1.0 / (params.lambda * static_cast<double>(t));

      double margin = b;
      for (int j = 0; j < m; ++j) margin += w[j] * Z[i][j];
      margin *= label;

      const double decay = 1.0 - 1.0 / static_cast<double>(t);
      for (int j = 0; j < m; ++j) w[j] *= decay;
      if (margin < 1.0) {
        for (int j = 0; j < m; ++j) w[j] += eta * label * Z[i][j];
        b += eta * params.lambda * label;  // lightly-stepped unregularized bias
      }
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr int kFormatVersion = 1;

nlohmann::ordered_json tree_to_json(const Tree& tree) {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& n : tree.nodes) {
    nlohmann::ordered_json j;
    j["cover"] = n.cover;
    if (n.is_leaf()) {
      j["value"] = n.value;
    } else {
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
    }
    nodes.push_back(std::move(j));
  }
  return nlohmann::ordered_json{{"nodes", std::move(nodes)}};
}

Tree tree_from_json(const nlohmann::json& j) {
  Tree tree;
  for (const auto& nj : j.at("nodes")) {
    TreeNode n;
    n.cover = nj.at("cover").get<double>();
    if (nj.contains("feature")) {
      n.feature = nj.at("feature").get<int>();
      n.threshold = nj.at("threshold").get<double>();
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
    } else {
      n.value = nj.at("value").get<std::vector<double>>();
    }
    tree.nodes.push_back(std::move(n));
  }
  return tree;
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  if (const auto* ens = std::get_if<TreeEnsemble>(&model)) {
    j["model_type"] = ens->kind == EnsembleKind::kForest ? "forest" : "boosted";
    j["n_classes"] = ens->n_classes;
    j["n_features"] = ens->n_features;
    j["feature_names"] = ens->feature_names;
    j["base_score"] = ens->base_score;
    nlohmann::ordered_json trees = nlohmann::ordered_json::array();
    for (const auto& t : ens->trees) trees.push_back(tree_to_json(t));
    j["trees"] = std::move(trees);
  } else {
    const auto& svm = std::get<LinearModel>(model);
    j["model_type"] = "svm";
    j["n_classes"] = svm.n_classes;
    j["feature_names"] = svm.feature_names;
    j["weights"] = svm.weights;
    j["bias"] = svm.bias;
    j["feat_mean"] = svm.feat_mean;
    j["feat_std"] = svm.feat_std;
    j["calibrated"] = false;
  }
  std::ofstream out(path);
  if (!out) throw IoError("save_model: cannot open " + path);
  out << j.dump(2) << '\n';
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_model: cannot open " + path);

  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("load_model: malformed JSON in " + path + ": " + e.what());
  }

  try {
    if (j.at("format_version").get<int>() != kFormatVersion)
      throw SchemaError("load_model: unsupported format version in " + path);
    const std::string type = j.at("model_type").get<std::string>();
    if (type == "forest" || type == "boosted") {
      TreeEnsemble ens;
      ens.kind = type == "forest" ? EnsembleKind::kForest : EnsembleKind::kBoosted;
      ens.n_classes = j.at("n_classes").get<int>();
      ens.n_features = j.at("n_features").get<int>();
      ens.feature_names = j.at("feature_names").get<std::vector<std::string>>();
      ens.base_score = j.at("base_score").get<std::vector<double>>();
      for (const auto& tj : j.at("trees")) ens.trees.push_back(tree_from_json(tj));
      ens.validate();
      return ens;
    }
    if (type == "svm") {
      LinearModel svm;
      svm.n_classes = j.at("n_classes").get<int>();
      svm.feature_names = j.at("feature_names").get<std::vector<std::string>>();
      svm.weights = j.at("weights").get<Matrix>();
      svm.bias = j.at("bias").get<std::vector<double>>();
      svm.feat_mean = j.at("feat_mean").get<std::vector<double>>();
      svm.feat_std = j.at("feat_std").get<std::vector<double>>();
      if (svm.weights.size() != static_cast<std::size_t>(svm.n_classes) ||
          svm.bias.size() != static_cast<std::size_t>(svm.n_classes))
        throw SchemaError("load_model: inconsistent svm shapes in " + path);
      return svm;
    }
    throw SchemaError("load_model: unknown model_type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("load_model: bad model file " + path + ": " + e.what());
  }
}

}  // namespace drivestyle

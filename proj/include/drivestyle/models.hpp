#pragma once

#include <string>
#include <variant>
#include <vector>

#include "drivestyle/common.hpp"

namespace drivestyle {

using Matrix = std::vector<std::vector<double>>;

/// One node of a binary decision tree, stored in a flat array. Internal
/// nodes split as x[feature] <= threshold -> left. cover is the training
/// weight that reached the node (bootstrap multiplicities included); leaf
/// value vectors hold per-class probabilities (forest) or margin increments
/// (boosted).
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double cover = 0.0;
  std::vector<double> value;

  bool is_leaf() const { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at index 0

  const TreeNode& leaf_for(const std::vector<double>& x) const;
  int depth() const;
};

enum class EnsembleKind { kForest, kBoosted };

struct TreeEnsemble {
  std::vector<Tree> trees;
  EnsembleKind kind = EnsembleKind::kForest;
  int n_classes = 0;
  std::vector<double> base_score;  // per class; zeros for forests
  std::vector<std::string> feature_names;
  int n_features = 0;

  /// Raw combined output: tree-average for forests (probabilities),
  /// base + tree sum for boosted models (margins).
  std::vector<double> margins(const std::vector<double>& x) const;
  std::vector<double> predict_proba(const std::vector<double>& x) const;
  int predict(const std::vector<double>& x) const;
  void validate() const;
};

/// One-vs-rest linear model on standardized features. Probabilities are a
/// softmax over margins and are not calibrated.
struct LinearModel {
  Matrix weights;             // [class][feature]
  std::vector<double> bias;   // [class]
  std::vector<double> feat_mean;
  std::vector<double> feat_std;
  int n_classes = 0;
  std::vector<std::string> feature_names;

  std::vector<double> margins(const std::vector<double>& x) const;
  std::vector<double> predict_proba(const std::vector<double>& x) const;
  int predict(const std::vector<double>& x) const;
};

using Model = std::variant<TreeEnsemble, LinearModel>;

std::vector<double> predict_proba(const Model& model,
                                  const std::vector<double>& x);
int predict(const Model& model, const std::vector<double>& x);
int model_n_features(const Model& model);
int model_n_classes(const Model& model);

struct TreeFitParams {
  int max_depth = 12;
  int min_samples_leaf = 1;
  int features_per_split = 0;  // 0 = all features
  std::uint64_t seed = 0;
};

struct ForestFitParams {
  int n_trees = 100;
  int max_depth = 12;
  int min_samples_leaf = 1;
  int features_per_split = 0;  // 0 = ceil(sqrt(n_features))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct GbtFitParams {
  int n_rounds = 100;
  int max_depth = 4;
  int min_samples_leaf = 1;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
};

struct SvmFitParams {
  double lambda = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 0;
};

/// Greedy Gini CART with midpoint thresholds. Ties break toward the lower
/// feature index, then the lower threshold. Leaves hold class frequencies.
Tree fit_tree(const Matrix& X, const std::vector<int>& y,
              const TreeFitParams& params);

TreeEnsemble fit_forest(const Matrix& X, const std::vector<int>& y,
                        const ForestFitParams& params);

/// Multiclass softmax boosting: one squared-error tree per class per round,
/// fitted to residuals (one-hot minus probability), leaves scaled by the
/// learning rate. base_score holds log class priors. loss_curve, when given,
/// receives the training log-loss after every round.
TreeEnsemble fit_gbt(const Matrix& X, const std::vector<int>& y,
                     const GbtFitParams& params,
                     std::vector<double>* loss_curve = nullptr);

/// One-vs-rest hinge loss via the Pegasos stochastic subgradient schedule on
/// standardized features.
LinearModel fit_linear_svm(const Matrix& X, const std::vector<int>& y,
                           const SvmFitParams& params);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace drivestyle

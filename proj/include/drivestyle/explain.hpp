#pragma once

#include <string>
#include <vector>

#include "drivestyle/models.hpp"

namespace drivestyle {

/// Per-instance attributions for every class. For forests the explained
/// output is the averaged leaf probability; for boosted ensembles it is the
/// pre-softmax margin (softmax is not additive, margins keep local accuracy
/// exact). Local accuracy: base_value[c] + sum_i phi[c][i] == fx[c].
struct Explanation {
  std::vector<double> base_value;           // [class]
  std::vector<std::vector<double>> phi;     // [class][feature]
  std::vector<double> fx;                   // [class]
  std::vector<double> x;                    // feature values of the instance
  std::vector<std::string> feature_names;
  std::string instance_ref;
};

struct BeeswarmRow {
  std::string instance_id;
  int class_index = 0;
  std::string feature;
  double feature_value = 0.0;
  double shap_value = 0.0;
};

struct BeeswarmTable {
  std::vector<BeeswarmRow> rows;
  /// mean |phi| per (class, feature), same order as feature_names.
  std::vector<std::vector<double>> global_importance;
  std::vector<std::string> feature_names;
  int n_classes = 0;
};

struct WaterfallEntry {
  std::string feature;
  double feature_value = 0.0;
  double phi = 0.0;
};

struct Waterfall {
  int class_index = 0;
  double base_value = 0.0;
  double fx = 0.0;
  std::vector<WaterfallEntry> contributions;  // |phi| descending, zeros dropped
};

/// Conditional expectation f_x(S) of one tree: split features in S follow
/// x's branch, all others average the children weighted by cover fractions.
/// Returns the per-class value vector.
std::vector<double> conditional_expectation(const Tree& tree,
                                            const std::vector<double>& x,
                                            const std::vector<bool>& in_subset);

/// Ensemble-level f_x(S) on the explained scale (average for forests,
/// base + sum for boosted).
std::vector<double> ensemble_conditional_expectation(
    const TreeEnsemble& ensemble, const std::vector<double>& x,
    const std::vector<bool>& in_subset);

/// Exact Shapley values by subset enumeration. Feasible only for small
/// feature counts (M <= 12); the reference oracle for tree_shap.
Explanation brute_force_shap(const TreeEnsemble& ensemble,
                             const std::vector<double>& x);

/// Polynomial path-dependent algorithm; equals brute_force_shap within
/// floating-point noise on every valid ensemble.
Explanation tree_shap(const TreeEnsemble& ensemble,
                      const std::vector<double>& x);

/// Explains every row of X; also aggregates mean |phi| global importance.
BeeswarmTable explain_dataset(const TreeEnsemble& ensemble, const Matrix& X);

/// Contributions for one class ordered by |phi| descending (exact zeros are
/// dropped). The cumulative sum from base_value reaches fx.
Waterfall waterfall(const Explanation& explanation, int class_index);

void export_beeswarm_csv(const BeeswarmTable& table, const std::string& path);
void export_global_importance_csv(const BeeswarmTable& table,
                                  const std::string& path);
void export_waterfall_json(const Waterfall& wf, const std::string& instance_ref,
                           const std::string& path);

}  // namespace drivestyle

#include "drivestyle/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace drivestyle {

namespace {

constexpr int kBruteForceLimit = 12;

std::vector<double> cond_exp_node(const Tree& tree, int node_id,
                                  const std::vector<double>& x,
                                  const std::vector<bool>& in_subset,
                                  int n_classes) {
  const TreeNode& node = tree.nodes[node_id];
  if (node.is_leaf()) return node.value;

  if (in_subset[node.feature]) {
    const int next = x[node.feature] <= node.threshold ? node.left : node.right;
    return cond_exp_node(tree, next, x, in_subset, n_classes);
  }

  if (node.cover <= 0.0)
    throw FeasibilityError("conditional_expectation: zero cover at internal node");
  const auto left = cond_exp_node(tree, node.left, x, in_subset, n_classes);
  const auto right = cond_exp_node(tree, node.right, x, in_subset, n_classes);
  const double wl = tree.nodes[node.left].cover / node.cover;
  const double wr = tree.nodes[node.right].cover / node.cover;
  std::vector<double> out(n_classes);
  for (int k = 0; k < n_classes; ++k)
    out[k] = wl * left[k] + wr * right[k];
  return out;
}

// -------------------------------------------------------------------------
// Path-dependent Tree SHAP. The recursion carries a list of path elements,
// one per distinct feature split on so far, each holding the proportion of
// training paths that flow through when the feature is unknown
// (zero_fraction), whether x follows the path when it is known
// (one_fraction), and a permutation weight aggregated per subset size
// (pweight).
// -------------------------------------------------------------------------

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, int unique_depth, double zero_fraction,
                 double one_fraction, int feature) {
  path[unique_depth].feature = feature;
  path[unique_depth].zero_fraction = zero_fraction;
  path[unique_depth].one_fraction = one_fraction;
  path[unique_depth].pweight = unique_depth == 0 ? 1.0 : 0.0;
  for (int i = unique_depth - 1; i >= 0; --i) {
    path[i + 1].pweight +=
        one_fraction * path[i].pweight * (i + 1) / double(unique_depth + 1);
    path[i].pweight =
        zero_fraction * path[i].pweight * (unique_depth - i) / double(unique_depth + 1);
  }
}

void unwind_path(PathElement* path, int unique_depth, int path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[unique_depth].pweight;

  for (int i = unique_depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight =
          next_one_portion * (unique_depth + 1) / double((i + 1) * one_fraction);
      next_one_portion =
          tmp - path[i].pweight * zero_fraction * (unique_depth - i) /
                    double(unique_depth + 1);
    } else {
      path[i].pweight = (path[i].pweight * (unique_depth + 1)) /
                        (zero_fraction * (unique_depth - i));
    }
  }
  for (int i = path_index; i < unique_depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* path, int unique_depth,
                        int path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[unique_depth].pweight;
  double total = 0.0;

  for (int i = unique_depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp =
          next_one_portion * (unique_depth + 1) / double((i + 1) * one_fraction);
      total += tmp;
      next_one_portion =
          path[i].pweight - tmp * zero_fraction * (unique_depth - i) /
                                double(unique_depth + 1);
    } else {
      total += (path[i].pweight / zero_fraction) /
               ((unique_depth - i) / double(unique_depth + 1));
    }
  }
  return total;
}

// phi is [feature][class] scratch for one tree.
void tree_shap_recurse(const Tree& tree, const std::vector<double>& x,
                       std::vector<std::vector<double>>& phi, int node_id,
                       int unique_depth, PathElement* parent_path,
                       double parent_zero_fraction, double parent_one_fraction,
                       int parent_feature) {
  // Each recursion level works on its own copy of the path.
  PathElement* path = parent_path + unique_depth + 1;
  std::copy(parent_path, parent_path + unique_depth + 1, path);
  extend_path(path, unique_depth, parent_zero_fraction, parent_one_fraction,
              parent_feature);

  const TreeNode& node = tree.nodes[node_id];
  if (node.is_leaf()) {
    for (int i = 1; i <= unique_depth; ++i) {
      const double w = unwound_path_sum(path, unique_depth, i);
      const PathElement& el = path[i];
      const double scale = w * (el.one_fraction - el.zero_fraction);
      for (std::size_t k = 0; k < node.value.size(); ++k)
        phi[el.feature][k] += scale * node.value[k];
    }
    return;
  }

  if (node.cover <= 0.0)
    throw FeasibilityError("tree_shap: zero cover at internal node");

  const bool goes_left = x[node.feature] <= node.threshold;
  const int hot = goes_left ? node.left : node.right;
  const int cold = goes_left ? node.right : node.left;
  double hot_zero_fraction = tree.nodes[hot].cover / node.cover;
  double cold_zero_fraction = tree.nodes[cold].cover / node.cover;
  double incoming_zero_fraction = 1.0;
  double incoming_one_fraction = 1.0;

  // If this feature was already split on above, undo its entry and fold its
  // fractions into the new one.
  int path_index = 0;
  for (; path_index <= unique_depth; ++path_index)
    if (path[path_index].feature == node.feature) break;
  if (path_index != unique_depth + 1) {
    incoming_zero_fraction = path[path_index].zero_fraction;
    incoming_one_fraction = path[path_index].one_fraction;
    unwind_path(path, unique_depth, path_index);
    unique_depth -= 1;
  }

  tree_shap_recurse(tree, x, phi, hot, unique_depth + 1, path,
                    hot_zero_fraction * incoming_zero_fraction,
                    incoming_one_fraction, node.feature);
  tree_shap_recurse(tree, x, phi, cold, unique_depth + 1, path,
                    cold_zero_fraction * incoming_zero_fraction, 0.0,
                    node.feature);
}

void check_instance(const TreeEnsemble& ensemble, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != ensemble.n_features)
    throw std::invalid_argument("explain: feature dimension mismatch");
}

std::vector<std::string> names_or_default(const TreeEnsemble& ensemble) {
  if (!ensemble.feature_names.empty() &&
      static_cast<int>(ensemble.feature_names.size()) == ensemble.n_features)
    return ensemble.feature_names;
  std::vector<std::string> names;
  names.reserve(ensemble.n_features);
  for (int i = 0; i < ensemble.n_features; ++i)
    names.push_back("f" + std::to_string(i));
  return names;
}

}  // namespace

std::vector<double> conditional_expectation(
    const Tree& tree, const std::vector<double>& x,
    const std::vector<bool>& in_subset) {
  int n_classes = 0;
  for (const auto& n : tree.nodes)
    if (n.is_leaf()) {
      n_classes = static_cast<int>(n.value.size());
      break;
    }
  return cond_exp_node(tree, 0, x, in_subset, n_classes);
}

std::vector<double> ensemble_conditional_expectation(
    const TreeEnsemble& ensemble, const std::vector<double>& x,
    const std::vector<bool>& in_subset) {
  std::vector<double> out(ensemble.n_classes, 0.0);
  if (ensemble.kind == EnsembleKind::kBoosted) out = ensemble.base_score;
  for (const auto& tree : ensemble.trees) {
    auto v = cond_exp_node(tree, 0, x, in_subset, ensemble.n_classes);
    for (int k = 0; k < ensemble.n_classes; ++k) out[k] += v[k];
  }
  if (ensemble.kind == EnsembleKind::kForest)
    for (double& v : out) v /= static_cast<double>(ensemble.trees.size());
  return out;
}

Explanation brute_force_shap(const TreeEnsemble& ensemble,
                             const std::vector<double>& x) {
  check_instance(ensemble, x);
  const int m = ensemble.n_features;
  if (m > kBruteForceLimit)
    throw FeasibilityError("brute_force_shap: " + std::to_string(m) +
                           " features exceed the enumeration budget of " +
                           std::to_string(kBruteForceLimit));

  // f_x(S) for every subset, encoded as a bitmask.
  const std::size_t n_subsets = std::size_t{1} << m;
  std::vector<std::vector<double>> fx(n_subsets);
  std::vector<bool> mask(m, false);
  for (std::size_t s = 0; s < n_subsets; ++s) {
    for (int i = 0; i < m; ++i) mask[i] = (s >> i) & 1;
    fx[s] = ensemble_conditional_expectation(ensemble, x, mask);
  }

  std::vector<double> factorial(m + 1, 1.0);
  for (int i = 1; i <= m; ++i) factorial[i] = factorial[i - 1] * i;

  Explanation ex;
  ex.x = x;
  ex.feature_names = names_or_default(ensemble);
  ex.base_value = fx[0];
  ex.fx = fx[n_subsets - 1];
  ex.phi.assign(ensemble.n_classes, std::vector<double>(m, 0.0));

  for (int i = 0; i < m; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t s = 0; s < n_subsets; ++s) {
      if (s & bit) continue;
      const int size_s = static_cast<int>(std::popcount(s));
      const double w =
          factorial[size_s] * factorial[m - size_s - 1] / factorial[m];
      const auto& with = fx[s | bit];
      const auto& without = fx[s];
      for (int k = 0; k < ensemble.n_classes; ++k)
        ex.phi[k][i] += w * (with[k] - without[k]);
    }
  }
  return ex;
}

Explanation tree_shap(const TreeEnsemble& ensemble,
                      const std::vector<double>& x) {
  check_instance(ensemble, x);
  ensemble.validate();

  const int m = ensemble.n_features;
  Explanation ex;
  ex.x = x;
  ex.feature_names = names_or_default(ensemble);
  ex.phi.assign(ensemble.n_classes, std::vector<double>(m, 0.0));
  ex.base_value.assign(ensemble.n_classes, 0.0);
  if (ensemble.kind == EnsembleKind::kBoosted) ex.base_value = ensemble.base_score;

  std::vector<std::vector<double>> phi(m, std::vector<double>(ensemble.n_classes, 0.0));
  const std::vector<bool> empty_subset(m, false);

  for (const auto& tree : ensemble.trees) {
    const int depth = tree.depth();
    // The recursion copies the path at every level; total storage is the
    // triangular number of the deepest path.
    std::vector<PathElement> storage(((depth + 2) * (depth + 3)) / 2);
    tree_shap_recurse(tree, x, phi, 0, 0, storage.data(), 1.0, 1.0, -1);

    auto base = cond_exp_node(tree, 0, x, empty_subset, ensemble.n_classes);
    for (int k = 0; k < ensemble.n_classes; ++k) ex.base_value[k] += base[k];
  }

  // Forests explain the tree-average; boosted models the base + sum.
  const double scale = ensemble.kind == EnsembleKind::kForest
                           ? 1.0 / static_cast<double>(ensemble.trees.size())
                           : 1.0;
  if (ensemble.kind == EnsembleKind::kForest)
    for (double& b : ex.base_value) b *= scale;
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < ensemble.n_classes; ++k)
      ex.phi[k][i] = phi[i][k] * scale;

  ex.fx = ensemble.margins(x);
  return ex;
}

BeeswarmTable explain_dataset(const TreeEnsemble& ensemble, const Matrix& X) {
  if (X.empty()) throw std::invalid_argument("explain_dataset: empty input");

  BeeswarmTable table;
  table.feature_names = names_or_default(ensemble);
  table.n_classes = ensemble.n_classes;
  table.global_importance.assign(
      ensemble.n_classes, std::vector<double>(ensemble.n_features, 0.0));

  for (std::size_t i = 0; i < X.size(); ++i) {
    Explanation ex = tree_shap(ensemble, X[i]);
    const std::string id = std::to_string(i);
    for (int k = 0; k < ensemble.n_classes; ++k) {
      for (int f = 0; f < ensemble.n_features; ++f) {
        table.rows.push_back(
            {id, k, table.feature_names[f], X[i][f], ex.phi[k][f]});
        table.global_importance[k][f] += std::abs(ex.phi[k][f]);
      }
    }
  }
  for (auto& row : table.global_importance)
    for (double& v : row) v /= static_cast<double>(X.size());
  return table;
}

Waterfall waterfall(const Explanation& explanation, int class_index) {
  if (class_index < 0 ||
      class_index >= static_cast<int>(explanation.phi.size()))
    throw std::invalid_argument("waterfall: class index out of range");

  Waterfall wf;
  wf.class_index = class_index;
  wf.base_value = explanation.base_value[class_index];
  wf.fx = explanation.fx[class_index];

  const auto& phi = explanation.phi[class_index];
  std::vector<std::size_t> order(phi.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(phi[a]) > std::abs(phi[b]);
  });
  for (std::size_t f : order) {
    if (phi[f] == 0.0) continue;
    wf.contributions.push_back(
        {explanation.feature_names[f], explanation.x[f], phi[f]});
  }
  return wf;
}

void export_beeswarm_csv(const BeeswarmTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("export_beeswarm_csv: cannot open " + path);
  out << "instance_id,class,feature,feature_value,shap_value\n";
  char buf[40];
  for (const auto& r : table.rows) {
    out << r.instance_id << ',' << r.class_index << ',' << r.feature << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.feature_value);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.shap_value);
    out << buf << '\n';
  }
}

void export_global_importance_csv(const BeeswarmTable& table,
                                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("export_global_importance_csv: cannot open " + path);
  out << "class,feature,mean_abs_shap\n";
  char buf[40];
  for (int k = 0; k < table.n_classes; ++k) {
    for (std::size_t f = 0; f < table.feature_names.size(); ++f) {
      std::snprintf(buf, sizeof(buf), "%.17g", table.global_importance[k][f]);
      out << k << ',' << table.feature_names[f] << ',' << buf << '\n';
    }
  }
}

void export_waterfall_json(const Waterfall& wf, const std::string& instance_ref,
                           const std::string& path) {
  nlohmann::ordered_json j;
  j["instance"] = instance_ref;
  j["class"] = wf.class_index;
  j["base_value"] = wf.base_value;
  j["fx"] = wf.fx;
  nlohmann::ordered_json contribs = nlohmann::ordered_json::array();
  double cumulative = wf.base_value;
  for (const auto& c : wf.contributions) {
    cumulative += c.phi;
    contribs.push_back({{"feature", c.feature},
                        {"feature_value", c.feature_value},
                        {"phi", c.phi},
                        {"cumulative", cumulative}});
  }
  j["contributions"] = std::move(contribs);
  std::ofstream out(path);
  if (!out) throw IoError("export_waterfall_json: cannot open " + path);
  out << j.dump(2) << '\n';
}

}  // namespace drivestyle

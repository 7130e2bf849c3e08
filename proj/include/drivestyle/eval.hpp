#pragma once

#include <string>
#include <vector>

#include "drivestyle/common.hpp"

namespace drivestyle {

/// Rows are true classes, columns are predicted classes.
struct ConfusionMatrix {
  std::vector<std::vector<long long>> counts;
  int n_classes() const { return static_cast<int>(counts.size()); }
  long long total() const;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // TP+FP == 0 or TP+FN == 0
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // macro
  std::vector<ClassMetrics> per_class;
  std::string averaging = "macro";
};

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true,
                                 const std::vector<int>& y_pred,
                                 int n_classes);

MetricsReport metrics(const ConfusionMatrix& cm);

/// Row-stochastic normalization; throws for an empty row, naming the class.
std::vector<std::vector<double>> normalize_cm(const ConfusionMatrix& cm);

void export_confusion_csv(const ConfusionMatrix& cm, const std::string& path);
void export_normalized_confusion_csv(const ConfusionMatrix& cm,
                                     const std::string& path);

}  // namespace drivestyle

#include "drivestyle/eval.hpp"

#include <cstdio>
#include <fstream>

namespace drivestyle {

long long ConfusionMatrix::total() const {
  long long sum = 0;
  for (const auto& row : counts)
    for (long long c : row) sum += c;
  return sum;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true,
                                 const std::vector<int>& y_pred,
                                 int n_classes) {
  if (y_true.size() != y_pred.size())
    throw std::invalid_argument("confusion_matrix: length mismatch");
  if (n_classes <= 0)
    throw std::invalid_argument("confusion_matrix: n_classes must be positive");

  ConfusionMatrix cm;
  cm.counts.assign(n_classes, std::vector<long long>(n_classes, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      throw std::invalid_argument("confusion_matrix: label out of range at index " +
                                  std::to_string(i));
    ++cm.counts[t][p];
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  const long long total = cm.total();
  if (total == 0) throw std::invalid_argument("metrics: empty confusion matrix");

  const int k = cm.n_classes();
  MetricsReport rep;
  rep.per_class.resize(k);

  long long diag = 0;
  for (int c = 0; c < k; ++c) diag += cm.counts[c][c];
  rep.accuracy = static_cast<double>(diag) / static_cast<double>(total);

  for (int c = 0; c < k; ++c) {
    long long tp = cm.counts[c][c];
    long long fp = 0, fn = 0;
    for (int o = 0; o < k; ++o) {
      if (o == c) continue;
      fp += cm.counts[o][c];
      fn += cm.counts[c][o];
    }
    ClassMetrics& m = rep.per_class[c];
    if (tp + fp == 0) {
      m.precision = 0.0;
      m.degenerate = true;
    } else {
      m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    if (tp + fn == 0) {
      m.recall = 0.0;
      m.degenerate = true;
    } else {
      m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    rep.precision += m.precision;
    rep.recall += m.recall;
    rep.f1 += m.f1;
  }
  rep.precision /= k;
  rep.recall /= k;
  rep.f1 /= k;
  return rep;
}

std::vector<std::vector<double>> normalize_cm(const ConfusionMatrix& cm) {
  std::vector<std::vector<double>> out;
  out.reserve(cm.counts.size());
  for (std::size_t r = 0; r < cm.counts.size(); ++r) {
    long long row_sum = 0;
    for (long long c : cm.counts[r]) row_sum += c;
    if (row_sum == 0)
      throw std::invalid_argument("normalize_cm: class " + std::to_string(r) +
                                  " has no instances");
    std::vector<double> row;
    row.reserve(cm.counts[r].size());
    for (long long c : cm.counts[r])
      row.push_back(static_cast<double>(c) / static_cast<double>(row_sum));
    out.push_back(std::move(row));
  }
  return out;
}

void export_confusion_csv(const ConfusionMatrix& cm, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("export_confusion_csv: cannot open " + path);
  for (const auto& row : cm.counts) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "\n");
  }
}

void export_normalized_confusion_csv(const ConfusionMatrix& cm,
                                     const std::string& path) {
  auto norm = normalize_cm(cm);
  std::ofstream out(path);
  if (!out) throw IoError("export_normalized_confusion_csv: cannot open " + path);
  char buf[40];
  for (const auto& row : norm) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      out << buf << (i + 1 < row.size() ? "," : "\n");
    }
  }
}

}  // namespace drivestyle

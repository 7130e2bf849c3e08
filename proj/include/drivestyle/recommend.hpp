#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drivestyle/explain.hpp"

namespace drivestyle {

enum class SignCondition { kPositivePhi, kNegativePhi, kAny };

/// One advice rule. advice_high, when present, replaces advice for instances
/// whose raw feature value exceeds the training median.
struct RecommendationRule {
  std::string feature_name;
  SignCondition sign = SignCondition::kPositivePhi;
  int priority = 0;
  std::string advice;
  std::string advice_high;  // empty = no high-value variant
};

/// Parsed rulebook: at most one rule per (feature, sign) pair.
class Rulebook {
 public:
  static Rulebook parse(const std::string& text);
  static Rulebook load(const std::string& path);
  /// The shipped default rulebook, also used to seed editable copies.
  static const std::string& default_text();

  const RecommendationRule* find(const std::string& feature,
                                 bool positive_phi) const;
  const std::vector<RecommendationRule>& rules() const { return rules_; }

 private:
  std::vector<RecommendationRule> rules_;
};

struct RankedFeature {
  std::string name;
  double phi = 0.0;
  double value = 0.0;
};

struct RecommendationReport {
  std::string instance_ref;
  int predicted_class = 0;
  std::vector<RankedFeature> top_features;
  std::vector<std::string> advice;
  std::vector<std::string> notes;  // e.g. features with no matching rule
};

/// The k features with the largest positive phi toward aggressive_class,
/// descending; fewer when fewer are positive.
std::vector<RankedFeature> top_features(const Explanation& explanation,
                                        int aggressive_class, int k);

/// Builds the per-instance report. Advice is emitted only for instances
/// predicted aggressive, in phi order of the matched top features. medians,
/// when provided, select high-value advice variants.
RecommendationReport recommend(
    const Explanation& explanation, int predicted_class, int aggressive_class,
    const Rulebook& rulebook, int k = 4,
    const std::map<std::string, double>* training_medians = nullptr);

void export_report_json(const RecommendationReport& report,
                        const std::string& path);

}  // namespace drivestyle

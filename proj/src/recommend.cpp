#include "drivestyle/recommend.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace drivestyle {

namespace {

// Tab-separated: feature, sign, priority, advice [, high-value advice].
// '#' starts a comment line.
const char kDefaultRulebook[] =
    "# feature\tsign\tpriority\tadvice\t[advice when value above training median]\n"
    "overspeed_count\tpositive\t1\tAdhere to speed limits to reduce the risk of aggressive driving classifications.\n"
    "speed\tpositive\t2\tMaintain a consistent speed to promote smoother and safer driving behavior.\tRegulate speed variations to promote safer and more stable driving behavior.\n"
    "distance\tpositive\t3\tKeep a safe following distance to avoid collisions.\tMaintain a safe and consistent following distance to reduce sudden braking and collision risks.\n"
    "brake_x\tpositive\t4\tApply braking smoothly to ensure better vehicle control and passenger comfort.\n"
    "accel_x\tpositive\t5\tLimit excessive acceleration to enhance driving stability.\n";

SignCondition parse_sign(const std::string& s, int line_no) {
  if (s == "positive") return SignCondition::kPositivePhi;
  if (s == "negative") return SignCondition::kNegativePhi;
  if (s == "any") return SignCondition::kAny;
  throw std::invalid_argument("rulebook: line " + std::to_string(line_no) +
                              ": unknown sign '" + s + "'");
}

}  // namespace

const std::string& Rulebook::default_text() {
  static const std::string text(kDefaultRulebook);
  return text;
}

Rulebook Rulebook::parse(const std::string& text) {
  Rulebook book;
  std::set<std::pair<std::string, int>> seen;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, '\t')) fields.push_back(field);
    if (fields.size() < 4 || fields.size() > 5)
      throw std::invalid_argument("rulebook: line " + std::to_string(line_no) +
                                  ": expected 4 or 5 tab-separated fields");

    RecommendationRule rule;
    rule.feature_name = fields[0];
    rule.sign = parse_sign(fields[1], line_no);
    try {
      rule.priority = std::stoi(fields[2]);
    } catch (const std::exception&) {
      throw std::invalid_argument("rulebook: line " + std::to_string(line_no) +
                                  ": bad priority '" + fields[2] + "'");
    }
    rule.advice = fields[3];
    if (fields.size() == 5) rule.advice_high = fields[4];
    if (rule.advice.empty())
      throw std::invalid_argument("rulebook: line " + std::to_string(line_no) +
                                  ": empty advice");

    auto key = std::make_pair(rule.feature_name, static_cast<int>(rule.sign));
    if (!seen.insert(key).second)
      throw std::invalid_argument("rulebook: duplicate rule for feature '" +
                                  rule.feature_name + "'");
    book.rules_.push_back(std::move(rule));
  }
  return book;
}

Rulebook Rulebook::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("rulebook: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const RecommendationRule* Rulebook::find(const std::string& feature,
                                         bool positive_phi) const {
  const SignCondition want =
      positive_phi ? SignCondition::kPositivePhi : SignCondition::kNegativePhi;
  const RecommendationRule* any_match = nullptr;
  for (const auto& rule : rules_) {
    if (rule.feature_name != feature) continue;
    if (rule.sign == want) return &rule;
    if (rule.sign == SignCondition::kAny) any_match = &rule;
  }
  return any_match;
}

std::vector<RankedFeature> top_features(const Explanation& explanation,
                                        int aggressive_class, int k) {
  if (k < 1) throw std::invalid_argument("top_features: k must be >= 1");
  if (aggressive_class < 0 ||
      aggressive_class >= static_cast<int>(explanation.phi.size()))
    throw std::invalid_argument("top_features: class index out of range");

  const auto& phi = explanation.phi[aggressive_class];
  std::vector<std::size_t> order(phi.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return phi[a] > phi[b]; });

  std::vector<RankedFeature> out;
  for (std::size_t i = 0; i < order.size() && static_cast<int>(out.size()) < k;
       ++i) {
    const std::size_t f = order[i];
    if (phi[f] <= 0.0) break;
    out.push_back({explanation.feature_names[f], phi[f], explanation.x[f]});
  }
  return out;
}

RecommendationReport recommend(
    const Explanation& explanation, int predicted_class, int aggressive_class,
    const Rulebook& rulebook, int k,
    const std::map<std::string, double>* training_medians) {
  RecommendationReport report;
  report.instance_ref = explanation.instance_ref;
  report.predicted_class = predicted_class;
  report.top_features = top_features(explanation, aggressive_class, k);

  if (predicted_class != aggressive_class) return report;

  for (const auto& feature : report.top_features) {
    const RecommendationRule* rule = rulebook.find(feature.name, feature.phi > 0);
    if (!rule) {
      report.notes.push_back("no rule for feature '" + feature.name + "'");
      continue;
    }
    std::string text = rule->advice;
    if (!rule->advice_high.empty() && training_medians) {
      auto it = training_medians->find(feature.name);
      if (it != training_medians->end() && feature.value > it->second)
        text = rule->advice_high;
    }
    report.advice.push_back(std::move(text));
  }
  return report;
}

void export_report_json(const RecommendationReport& report,
                        const std::string& path) {
  nlohmann::ordered_json j;
  j["instance"] = report.instance_ref;
  j["predicted_class"] = report.predicted_class;
  nlohmann::ordered_json feats = nlohmann::ordered_json::array();
  for (const auto& f : report.top_features)
    feats.push_back({{"feature", f.name}, {"phi", f.phi}, {"value", f.value}});
  j["top_features"] = std::move(feats);
  j["advice"] = report.advice;
  j["notes"] = report.notes;
  std::ofstream out(path);
  if (!out) throw IoError("export_report_json: cannot open " + path);
  out << j.dump(2) << '\n';
}

}  // namespace drivestyle

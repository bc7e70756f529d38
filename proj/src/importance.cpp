#include <algorithm>
#include <ostream>

#include "crimetype/csv.hpp"
#include "crimetype/error.hpp"
#include "crimetype/models.hpp"

namespace crimetype {

ImportanceRanking feature_importance(const Classifier& model) {
  std::vector<double> weights(model.feature_names().size(), 0.0);
  if (const auto* tree = dynamic_cast<const DecisionTreeClassifier*>(&model)) {
    tree->tree().accumulate_importance(weights);
  } else if (const auto* forest = dynamic_cast<const RandomForestClassifier*>(&model)) {
    for (const auto& t : forest->trees()) t.accumulate_importance(weights);
  } else {
    throw UnsupportedModelError("feature importance needs a tree-based model, got " +
                                std::string(to_string(model.kind())));
  }
  double total = 0;
  for (double w : weights) total += w;
  // No split anywhere: every feature contributed equally (nothing).
  for (double& w : weights) w = total > 0 ? w / total : 1.0 / static_cast<double>(weights.size());

  ImportanceRanking ranking;
  for (std::size_t j = 0; j < weights.size(); ++j) ranking.entries.emplace_back(model.feature_names()[j], weights[j]);
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranking;
}

void to_json(nlohmann::json& j, const ImportanceRanking& r) {
  j = nlohmann::json::array();
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    j.push_back({{"rank", i}, {"feature", r.entries[i].first}, {"weight", r.entries[i].second}});
  }
}

void write_importance_csv(std::ostream& out, const ImportanceRanking& r) {
  out << "rank,feature,weight\n";
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    out << i << ',' << csv_escape(r.entries[i].first) << ',' << format_number(r.entries[i].second) << '\n';
  }
}

}  // namespace crimetype

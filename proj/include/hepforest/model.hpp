#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hepforest/boosting.hpp"
#include "hepforest/ensemble.hpp"
#include "hepforest/tree.hpp"

namespace hepforest {

enum class ModelKind : std::uint8_t { Tree, RF, ET, BDT, BRF, BXT };

const char* model_kind_name(ModelKind k);
ModelKind parse_model_kind(const std::string& name);
bool is_boosted(ModelKind k);

// A trained model of any kind plus what is needed to score raw events:
// the feature names it was trained on and the imputation fill values.
struct Model {
  ModelKind kind = ModelKind::Tree;
  std::variant<DecisionTree, EnsembleModel, BoostedModel> body;
  std::vector<std::string> feature_names;
  std::vector<double> imputation;

  // [0, 1] for trees and bagged ensembles, [-1, 1] for boosted models.
  double score(std::span<const double> x) const;
  // Score above which an event is labeled signal.
  double decision_threshold() const { return is_boosted(kind) ? 0.0 : 0.5; }
  Label predict(std::span<const double> x) const {
    return score(x) > decision_threshold() ? Label::Signal : Label::Background;
  }

  const EnsembleModel* ensemble() const;
  const BoostedModel* boosted() const;
};

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const TreeConfig& c);
nlohmann::json to_json(const EnsembleConfig& c);
nlohmann::json to_json(const BoostConfig& c);
TreeConfig tree_config_from_json(const nlohmann::json& j, TreeConfig defaults = {});
EnsembleConfig ensemble_config_from_json(const nlohmann::json& j, EnsembleConfig defaults = {});
BoostConfig boost_config_from_json(const nlohmann::json& j, BoostConfig defaults = {});

// Nested nodes: {feature, threshold, left, right} or {w_s, w_b}. Internal
// nodes also carry their w_s/w_b totals.
nlohmann::json to_json(const DecisionTree& t);
DecisionTree tree_from_json(const nlohmann::json& j, std::size_t num_features);

nlohmann::json to_json(const EnsembleModel& m);
EnsembleModel ensemble_from_json(const nlohmann::json& j, std::size_t num_features);

nlohmann::json to_json(const BoostedModel& m);
BoostedModel boosted_from_json(const nlohmann::json& j, std::size_t num_features);

// Versioned envelope around any model.
nlohmann::json to_json(const Model& m);
Model model_from_json(const nlohmann::json& j);

void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

}  // namespace hepforest

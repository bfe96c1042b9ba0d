#include "hepforest/model.hpp"

#include <fstream>
#include <stdexcept>

namespace hepforest {

using nlohmann::json;

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Tree: return "Tree";
    case ModelKind::RF: return "RF";
    case ModelKind::ET: return "ET";
    case ModelKind::BDT: return "BDT";
    case ModelKind::BRF: return "BRF";
    case ModelKind::BXT: return "BXT";
  }
  return "Tree";
}

ModelKind parse_model_kind(const std::string& name) {
  for (auto k : {ModelKind::Tree, ModelKind::RF, ModelKind::ET, ModelKind::BDT, ModelKind::BRF, ModelKind::BXT})
    if (name == model_kind_name(k)) return k;
  throw ConfigError("unknown model type '" + name + "' (expected Tree, RF, ET, BDT, BRF or BXT)");
}

bool is_boosted(ModelKind k) { return k == ModelKind::BDT || k == ModelKind::BRF || k == ModelKind::BXT; }

double Model::score(std::span<const double> x) const {
  return std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTree>)
          return m.predict_score(x);
        else
          return m.score(x);
      },
      body);
}

const EnsembleModel* Model::ensemble() const { return std::get_if<EnsembleModel>(&body); }
const BoostedModel* Model::boosted() const { return std::get_if<BoostedModel>(&body); }

// ---- configs ----------------------------------------------------------------

namespace {

const char* split_mode_name(SplitMode m) { return m == SplitMode::Exhaustive ? "Exhaustive" : "RandomK"; }

SplitMode parse_split_mode(const std::string& s) {
  if (s == "Exhaustive") return SplitMode::Exhaustive;
  if (s == "RandomK") return SplitMode::RandomK;
  throw ConfigError("unknown split_mode '" + s + "'");
}

EnsembleFlavor parse_flavor(const std::string& s) {
  if (s == "RandomForest") return EnsembleFlavor::RandomForest;
  if (s == "ExtraTrees") return EnsembleFlavor::ExtraTrees;
  throw ConfigError("unknown flavor '" + s + "'");
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
}

}  // namespace

json to_json(const TreeConfig& c) {
  json j;
  j["max_depth"] = c.max_depth;
  j["min_samples_split"] = c.min_samples_split;
  j["min_quality"] = c.min_quality;
  j["split_mode"] = split_mode_name(c.split_mode);
  j["k_features"] = c.k_features ? json(*c.k_features) : json("auto");
  j["rng_seed"] = c.rng_seed;
  return j;
}

TreeConfig tree_config_from_json(const json& j, TreeConfig c) {
  require_object(j, "tree config");
  read_if(j, "max_depth", c.max_depth);
  read_if(j, "min_samples_split", c.min_samples_split);
  read_if(j, "min_quality", c.min_quality);
  if (j.contains("split_mode")) c.split_mode = parse_split_mode(j.at("split_mode").get<std::string>());
  if (j.contains("k_features")) {
    const auto& k = j.at("k_features");
    if (k.is_string() && k.get<std::string>() == "auto")
      c.k_features.reset();
    else if (k.is_number_unsigned())
      c.k_features = k.get<std::size_t>();
    else
      throw ConfigError("k_features must be a positive integer or \"auto\"");
  }
  read_if(j, "rng_seed", c.rng_seed);
  c.validate();
  return c;
}

json to_json(const EnsembleConfig& c) {
  json j;
  j["n_trees"] = c.n_trees;
  j["flavor"] = flavor_name(c.flavor);
  j["tree"] = to_json(c.tree);
  j["bootstrap"] = c.bootstrap;
  j["rng_seed"] = c.rng_seed;
  return j;
}

EnsembleConfig ensemble_config_from_json(const json& j, EnsembleConfig c) {
  require_object(j, "ensemble config");
  read_if(j, "n_trees", c.n_trees);
  if (j.contains("flavor")) c.flavor = parse_flavor(j.at("flavor").get<std::string>());
  if (j.contains("tree")) c.tree = tree_config_from_json(j.at("tree"), c.tree);
  read_if(j, "bootstrap", c.bootstrap);
  read_if(j, "rng_seed", c.rng_seed);
  c.validate();
  return c;
}

json to_json(const BoostConfig& c) {
  json j;
  j["n_stages"] = c.n_stages;
  j["init_weights"] = c.init_weights == InitWeights::Uniform ? "Uniform" : "Balanced";
  j["rng_seed"] = c.rng_seed;
  std::visit(
      [&](const auto& base) {
        using T = std::decay_t<decltype(base)>;
        if constexpr (std::is_same_v<T, TreeConfig>) {
          j["base"] = {{"type", "tree"}, {"tree", to_json(base)}};
        } else {
          j["base"] = {{"type", "ensemble"}, {"ensemble", to_json(base)}};
        }
      },
      c.base);
  return j;
}

BoostConfig boost_config_from_json(const json& j, BoostConfig c) {
  require_object(j, "boost config");
  read_if(j, "n_stages", c.n_stages);
  if (j.contains("init_weights")) {
    const auto s = j.at("init_weights").get<std::string>();
    if (s == "Uniform")
      c.init_weights = InitWeights::Uniform;
    else if (s == "Balanced")
      c.init_weights = InitWeights::Balanced;
    else
      throw ConfigError("unknown init_weights '" + s + "'");
  }
  read_if(j, "rng_seed", c.rng_seed);
  if (j.contains("base")) {
    const auto& b = j.at("base");
    require_object(b, "boost base");
    const auto type = b.value("type", std::string("ensemble"));
    if (type == "tree")
      c.base = tree_config_from_json(b.value("tree", json::object()));
    else if (type == "ensemble")
      c.base = ensemble_config_from_json(b.value("ensemble", json::object()));
    else
      throw ConfigError("boost base type must be \"tree\" or \"ensemble\"");
  }
  c.validate();
  return c;
}

// ---- trees ------------------------------------------------------------------

namespace {

json node_to_json(const DecisionTree& t, std::size_t i) {
  const auto& n = t.nodes()[i];
  if (n.is_leaf()) return json{{"w_s", n.w_signal}, {"w_b", n.w_background}};
  return json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", node_to_json(t, static_cast<std::size_t>(n.left))},
              {"right", node_to_json(t, static_cast<std::size_t>(n.right))},
              {"w_s", n.w_signal},
              {"w_b", n.w_background}};
}

// Rebuilds nodes in the pre-order layout used by fit_tree. Returns the
// (w_s, w_b) totals of the subtree.
std::pair<double, double> node_from_json(const json& j, std::vector<DecisionTree::Node>& nodes, std::size_t self) {
  if (!j.is_object()) throw std::runtime_error("tree node must be an object");
  if (j.contains("feature")) {
    const auto left = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    const auto right = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    nodes[self].feature = j.at("feature").get<std::int32_t>();
    nodes[self].threshold = j.at("threshold").get<double>();
    nodes[self].left = left;
    nodes[self].right = right;
    const auto l = node_from_json(j.at("left"), nodes, static_cast<std::size_t>(left));
    const auto r = node_from_json(j.at("right"), nodes, static_cast<std::size_t>(right));
    nodes[self].w_signal = j.contains("w_s") ? j.at("w_s").get<double>() : l.first + r.first;
    nodes[self].w_background = j.contains("w_b") ? j.at("w_b").get<double>() : l.second + r.second;
  } else {
    nodes[self].w_signal = j.at("w_s").get<double>();
    nodes[self].w_background = j.at("w_b").get<double>();
  }
  return {nodes[self].w_signal, nodes[self].w_background};
}

}  // namespace

json to_json(const DecisionTree& t) { return node_to_json(t, 0); }

DecisionTree tree_from_json(const json& j, std::size_t num_features) {
  std::vector<DecisionTree::Node> nodes(1);
  node_from_json(j, nodes, 0);
  return DecisionTree(num_features, std::move(nodes));
}

json to_json(const EnsembleModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees()) trees.push_back(to_json(t));
  return json{{"flavor", flavor_name(m.flavor())},
              {"bootstrap", m.bootstrap()},
              {"training_rows", m.training_rows()},
              {"tree_seeds", m.tree_seeds()},
              {"trees", std::move(trees)}};
}

EnsembleModel ensemble_from_json(const json& j, std::size_t num_features) {
  std::vector<DecisionTree> trees;
  for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t, num_features));
  return EnsembleModel(parse_flavor(j.at("flavor").get<std::string>()), std::move(trees),
                       j.at("tree_seeds").get<std::vector<std::uint64_t>>(), j.at("bootstrap").get<bool>(),
                       j.at("training_rows").get<std::size_t>());
}

json to_json(const BoostedModel& m) {
  json stages = json::array();
  for (const auto& s : m.stages()) {
    json base = std::visit(
        [](const auto& model) {
          using T = std::decay_t<decltype(model)>;
          if constexpr (std::is_same_v<T, DecisionTree>)
            return json{{"type", "tree"}, {"tree", to_json(model)}};
          else
            return json{{"type", "ensemble"}, {"ensemble", to_json(model)}};
        },
        s.model);
    stages.push_back(json{{"alpha", s.alpha}, {"error", s.error}, {"base", std::move(base)}});
  }
  return json{{"config", to_json(m.config())}, {"stages", std::move(stages)}};
}

BoostedModel boosted_from_json(const json& j, std::size_t num_features) {
  std::vector<BoostStage> stages;
  for (const auto& s : j.at("stages")) {
    const auto& base = s.at("base");
    BaseModel model;
    if (base.at("type").get<std::string>() == "tree")
      model = tree_from_json(base.at("tree"), num_features);
    else
      model = ensemble_from_json(base.at("ensemble"), num_features);
    stages.push_back({std::move(model), s.at("alpha").get<double>(), s.at("error").get<double>()});
  }
  return BoostedModel(std::move(stages), boost_config_from_json(j.at("config")));
}

// ---- envelope ---------------------------------------------------------------

json to_json(const Model& m) {
  json body = std::visit([](const auto& b) { return to_json(b); }, m.body);
  return json{{"format", "hepforest-model"},
              {"version", kModelFormatVersion},
              {"kind", model_kind_name(m.kind)},
              {"feature_names", m.feature_names},
              {"imputation", m.imputation},
              {"model", std::move(body)}};
}

Model model_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != "hepforest-model")
      throw std::runtime_error("not a hepforest model artifact");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw std::runtime_error("unsupported model format version " + j.at("version").dump());
    Model m;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.imputation = j.at("imputation").get<std::vector<double>>();
    const std::size_t f = m.feature_names.size();
    const auto& body = j.at("model");
    switch (m.kind) {
      case ModelKind::Tree: m.body = tree_from_json(body, f); break;
      case ModelKind::RF:
      case ModelKind::ET: m.body = ensemble_from_json(body, f); break;
      default: m.body = boosted_from_json(body, f); break;
    }
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed model artifact: ") + e.what());
  }
}

void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model to " + path);
  out << to_json(m).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing model to " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace hepforest

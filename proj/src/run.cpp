#include "hepforest/run.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <thread>

#include "hepforest/ensemble.hpp"
#include "hepforest/export.hpp"
#include "hepforest/metrics.hpp"
#include "hepforest/parallel.hpp"

namespace hepforest::run {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* weighting_name(SampleWeighting w) {
  switch (w) {
    case SampleWeighting::Balanced: return "balanced";
    case SampleWeighting::Raw: return "raw";
    case SampleWeighting::Uniform: return "uniform";
  }
  return "balanced";
}

SampleWeighting parse_weighting(const std::string& s) {
  if (s == "balanced") return SampleWeighting::Balanced;
  if (s == "raw") return SampleWeighting::Raw;
  if (s == "uniform") return SampleWeighting::Uniform;
  throw ConfigError("sample_weights must be balanced, raw or uniform");
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

CsvSchema schema_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("schema must be a JSON object");
  CsvSchema s;
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset != "higgs_opendata") throw ConfigError("unknown schema preset '" + preset + "'");
    s = CsvSchema::higgs_opendata();
  }
  read_if(j, "id", s.id_column);
  read_if(j, "weight", s.weight_column);
  read_if(j, "label", s.label_column);
  read_if(j, "split", s.split_column);
  read_if(j, "features", s.feature_columns);
  read_if(j, "ignore", s.ignore_columns);
  read_if(j, "signal_tokens", s.signal_tokens);
  read_if(j, "background_tokens", s.background_tokens);
  if (j.contains("split_values")) {
    s.split_values.clear();
    for (const auto& [tag, name] : j.at("split_values").items())
      s.split_values[tag] = parse_provenance(name.get<std::string>());
  }
  return s;
}

json schema_to_json(const CsvSchema& s) {
  json values = json::object();
  for (const auto& [tag, p] : s.split_values) values[tag] = provenance_name(p);
  return json{{"id", s.id_column},
              {"weight", s.weight_column},
              {"label", s.label_column},
              {"split", s.split_column},
              {"features", s.feature_columns},
              {"ignore", s.ignore_columns},
              {"signal_tokens", s.signal_tokens},
              {"background_tokens", s.background_tokens},
              {"split_values", values}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string compiler_id() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

}  // namespace

void RunConfig::validate() const {
  if (!(percentile > 0.0 && percentile < 100.0)) throw ConfigError("percentile must be in (0, 100)");
  for (const double p : percentile_grid)
    if (!(p > 0.0 && p < 100.0)) throw ConfigError("percentile_grid values must be in (0, 100)");
  if (histogram_bins < 1) throw ConfigError("histogram_bins must be >= 1");
  model.tree.validate();
  if (model.n_trees < 1) throw ConfigError("model.n_trees must be >= 1");
  if (model.n_stages < 1) throw ConfigError("model.n_stages must be >= 1");
  for (const auto n : benchmark.n_trees)
    if (n < 1) throw ConfigError("benchmark.n_trees values must be >= 1");
}

json to_json(const RunConfig& c) {
  json models = json::array();
  for (const auto k : c.benchmark.models) models.push_back(model_kind_name(k));
  return json{{"data",
               {{"path", c.data.path}, {"train", c.data.train}, {"validation", c.data.validation}, {"test", c.data.test}}},
              {"schema", schema_to_json(c.schema)},
              {"model",
               {{"type", model_kind_name(c.model.kind)},
                {"tree", hepforest::to_json(c.model.tree)},
                {"n_trees", c.model.n_trees},
                {"bootstrap", c.model.bootstrap},
                {"n_stages", c.model.n_stages},
                {"init_weights", c.model.init_weights == InitWeights::Uniform ? "Uniform" : "Balanced"}}},
              {"sample_weights", weighting_name(c.sample_weights)},
              {"percentile", c.percentile},
              {"percentile_grid", c.percentile_grid},
              {"seed", c.seed},
              {"output_dir", c.output_dir},
              {"workers", c.workers},
              {"impute", c.impute},
              {"rescale_weights", c.rescale_weights},
              {"histogram_bins", c.histogram_bins},
              {"benchmark", {{"models", models}, {"n_trees", c.benchmark.n_trees}}}};
}

json default_config_json() { return to_json(RunConfig{}); }

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  if (j.contains("data")) {
    const auto& d = j.at("data");
    read_if(d, "path", c.data.path);
    read_if(d, "train", c.data.train);
    read_if(d, "validation", c.data.validation);
    read_if(d, "test", c.data.test);
  }
  if (j.contains("schema")) c.schema = schema_from_json(j.at("schema"));
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.contains("type")) c.model.kind = parse_model_kind(m.at("type").get<std::string>());
    if (m.contains("tree")) c.model.tree = tree_config_from_json(m.at("tree"), c.model.tree);
    read_if(m, "n_trees", c.model.n_trees);
    read_if(m, "bootstrap", c.model.bootstrap);
    read_if(m, "n_stages", c.model.n_stages);
    if (m.contains("init_weights")) {
      const auto s = m.at("init_weights").get<std::string>();
      if (s == "Uniform")
        c.model.init_weights = InitWeights::Uniform;
      else if (s == "Balanced")
        c.model.init_weights = InitWeights::Balanced;
      else
        throw ConfigError("model.init_weights must be Uniform or Balanced");
    }
  }
  if (j.contains("sample_weights")) c.sample_weights = parse_weighting(j.at("sample_weights").get<std::string>());
  read_if(j, "percentile", c.percentile);
  read_if(j, "percentile_grid", c.percentile_grid);
  read_if(j, "seed", c.seed);
  read_if(j, "output_dir", c.output_dir);
  read_if(j, "workers", c.workers);
  read_if(j, "impute", c.impute);
  read_if(j, "rescale_weights", c.rescale_weights);
  read_if(j, "histogram_bins", c.histogram_bins);
  if (j.contains("benchmark")) {
    const auto& b = j.at("benchmark");
    if (b.contains("models")) {
      c.benchmark.models.clear();
      for (const auto& name : b.at("models")) c.benchmark.models.push_back(parse_model_kind(name.get<std::string>()));
    }
    read_if(b, "n_trees", c.benchmark.n_trees);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  RunConfig c = config_from_json(j);
  // Data paths are relative to the config file.
  const fs::path base = fs::path(path).parent_path();
  for (std::string* p : {&c.data.path, &c.data.train, &c.data.validation, &c.data.test})
    if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  return c;
}

Dataset load_split(const RunConfig& cfg, Provenance split) {
  if (!cfg.data.path.empty()) {
    if (cfg.schema.split_column.empty())
      throw ConfigError("data.path requires schema.split to name the split column");
    const Dataset all = load_csv(cfg.data.path, cfg.schema);
    Dataset part = select_split(all, split);
    if (cfg.rescale_weights)
      part = rescale_class_weights(part, all.weight_sum(Label::Signal), all.weight_sum(Label::Background));
    return part;
  }
  const std::string* path = nullptr;
  switch (split) {
    case Provenance::Train: path = &cfg.data.train; break;
    case Provenance::Validation: path = &cfg.data.validation; break;
    case Provenance::Test: path = &cfg.data.test; break;
    case Provenance::Custom: throw ConfigError("custom split requires data.path with a split column");
  }
  if (path->empty()) throw ConfigError(std::string("no data file configured for the ") + provenance_name(split) + " split");
  Dataset d = load_csv(*path, cfg.schema);
  d.set_provenance(split);
  if (cfg.rescale_weights && split != Provenance::Train) {
    const Dataset train = load_csv(cfg.data.train, cfg.schema);
    d = rescale_class_weights(d, train.weight_sum(Label::Signal), train.weight_sum(Label::Background));
  }
  return d;
}

EnsembleConfig ensemble_config(const RunConfig& cfg, EnsembleFlavor flavor) {
  EnsembleConfig e;
  e.n_trees = cfg.model.n_trees;
  e.flavor = flavor;
  e.tree = cfg.model.tree;
  e.bootstrap = cfg.model.bootstrap;
  e.rng_seed = cfg.seed;
  return e;
}

BoostConfig boost_config(const RunConfig& cfg) {
  BoostConfig b;
  b.n_stages = cfg.model.n_stages;
  b.init_weights = cfg.model.init_weights;
  b.rng_seed = cfg.seed;
  switch (cfg.model.kind) {
    case ModelKind::BDT: {
      TreeConfig t = cfg.model.tree;
      t.rng_seed = cfg.seed;
      b.base = t;
      break;
    }
    case ModelKind::BRF: b.base = ensemble_config(cfg, EnsembleFlavor::RandomForest); break;
    case ModelKind::BXT: b.base = ensemble_config(cfg, EnsembleFlavor::ExtraTrees); break;
    default: throw ConfigError("boost_config: model type is not boosted");
  }
  return b;
}

TrainResult train_model(const RunConfig& cfg, const Dataset& train) {
  cfg.validate();
  if (train.empty()) throw DataError("training split is empty");
  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  Model& model = result.model;
  model.kind = cfg.model.kind;
  model.feature_names = train.feature_names();

  if (cfg.impute) {
    model.imputation = feature_medians(train);
  } else {
    for (const auto u : train.undefined_mask())
      if (u) throw DataError("training data has undefined cells; enable imputation");
  }
  const Dataset prepared = cfg.impute ? apply_imputation(train, model.imputation) : train;
  const BalancedWeights balanced = rebalance_weights(prepared);

  std::vector<double> sample_weights;
  switch (cfg.sample_weights) {
    case SampleWeighting::Balanced: sample_weights = balanced.weights; break;
    case SampleWeighting::Raw: sample_weights.assign(prepared.weights().begin(), prepared.weights().end()); break;
    case SampleWeighting::Uniform: sample_weights.assign(prepared.size(), 1.0); break;
  }

  switch (cfg.model.kind) {
    case ModelKind::Tree: {
      TreeConfig t = cfg.model.tree;
      t.rng_seed = cfg.seed;
      model.body = fit_tree(SampleView(prepared.features(), prepared.labels(), sample_weights), t);
      break;
    }
    case ModelKind::RF:
      model.body = fit_ensemble(prepared, sample_weights, ensemble_config(cfg, EnsembleFlavor::RandomForest), cfg.workers);
      break;
    case ModelKind::ET:
      model.body = fit_ensemble(prepared, sample_weights, ensemble_config(cfg, EnsembleFlavor::ExtraTrees), cfg.workers);
      break;
    default:
      model.body = fit_boosted(prepared, balanced, boost_config(cfg), cfg.workers, &result.stages);
      break;
  }
  result.seconds = seconds_since(start);
  return result;
}

Dataset prepare_for_model(const Model& m, const Dataset& d) {
  if (d.feature_names() != m.feature_names)
    throw DataError("feature names of the data do not match the model's training features");
  if (!m.imputation.empty()) return apply_imputation(d, m.imputation);
  for (const auto u : d.undefined_mask())
    if (u) throw DataError("data has undefined cells but the model carries no imputation values");
  return d;
}

std::vector<double> model_scores(const Model& m, const Dataset& prepared) {
  std::vector<double> scores(prepared.size());
  for (std::size_t i = 0; i < prepared.size(); ++i) scores[i] = m.score(prepared.features().row(i));
  return scores;
}

EvalReport evaluate_model(const Model& m, const Dataset& d, double percentile, const std::string& split_name) {
  const Dataset prepared = prepare_for_model(m, d);
  if (prepared.empty()) throw DataError("evaluation split is empty");
  const auto scores = model_scores(m, prepared);

  EvalReport r;
  r.model = model_kind_name(m.kind);
  r.split = split_name;
  r.n = prepared.size();
  r.percentile = percentile;
  r.threshold = metrics::threshold_at_percentile(scores, percentile);
  const auto c = metrics::confusion_weighted(scores, prepared.labels(), prepared.weights(), r.threshold);
  r.selection_size = c.selected();
  r.false_positive_count = c.fp_n;
  r.shat = c.shat();
  r.bhat = c.bhat();
  if (c.bhat() > 0.0) {
    r.ams = metrics::ams_full(c.shat(), c.bhat());
    r.ams_simple = metrics::ams_simple(c.shat(), c.bhat());
  } else {
    r.ams = r.ams_simple = std::numeric_limits<double>::quiet_NaN();
  }

  std::vector<Label> predicted(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    predicted[i] = scores[i] > m.decision_threshold() ? Label::Signal : Label::Background;
  const auto balanced = rebalance_weights(prepared);
  r.balanced_error = metrics::balanced_error(predicted, prepared.labels(), balanced.weights);
  r.auc = metrics::roc_auc(scores, prepared.labels(), prepared.weights());
  return r;
}

json to_json(const EvalReport& r) {
  return json{{"model", r.model},
              {"split", r.split},
              {"n", r.n},
              {"percentile", r.percentile},
              {"threshold", r.threshold},
              {"selection_size", r.selection_size},
              {"false_positive_count", r.false_positive_count},
              {"shat", r.shat},
              {"bhat", r.bhat},
              {"ams", r.ams},
              {"ams_simple", r.ams_simple},
              {"balanced_error", r.balanced_error},
              {"auc", r.auc}};
}

std::vector<std::string> write_curves(const RunConfig& cfg, const Model& m, const Dataset& d,
                                      const std::string& split_name, const std::string& dir) {
  fs::create_directories(dir);
  const Dataset prepared = prepare_for_model(m, d);
  const auto scores = model_scores(m, prepared);
  std::vector<std::string> written;
  auto path = [&](const std::string& stem) { return (fs::path(dir) / (stem + "_" + split_name + ".csv")).string(); };

  const auto curve = metrics::significance_curve(scores, prepared.labels(), prepared.weights(), cfg.percentile_grid);
  written.push_back(path("curve"));
  write_curve_csv(written.back(), curve);

  const auto roc = metrics::roc_curve(scores, prepared.labels(), prepared.weights());
  written.push_back(path("roc"));
  write_roc_csv(written.back(), roc);

  if (const auto* boosted = m.boosted()) {
    const auto diags = staged_diagnostics(*boosted, prepared, cfg.percentile, cfg.histogram_bins);
    written.push_back(path("staged_hist"));
    write_staged_histogram_csv(written.back(), diags);
    written.push_back(path("staged_fp"));
    write_staged_fp_csv(written.back(), diags);
  }

  const EnsembleModel* ensemble = m.ensemble();
  if (!ensemble && m.boosted()) ensemble = std::get_if<EnsembleModel>(&m.boosted()->stages().front().model);
  if (ensemble && ensemble->size() >= 2) {
    std::vector<std::size_t> trees(std::min<std::size_t>(100, ensemble->size()));
    std::iota(trees.begin(), trees.end(), std::size_t{0});
    const auto corr = tree_correlation_matrix(*ensemble, prepared, trees);
    written.push_back(path("tree_correlation"));
    write_correlation_csv(written.back(), trees, corr);
  }
  return written;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

json run_benchmark(const RunConfig& cfg, const Dataset& train, std::vector<BenchmarkEntry>* entries_out) {
  std::vector<BenchmarkEntry> entries;
  json fits = json::object();
  for (const ModelKind kind : cfg.benchmark.models) {
    RunConfig local = cfg;
    local.model.kind = kind;
    std::vector<std::size_t> sizes = kind == ModelKind::Tree || kind == ModelKind::BDT
                                         ? std::vector<std::size_t>{1}
                                         : cfg.benchmark.n_trees;
    std::vector<double> xs;
    std::vector<double> ys;
    for (const std::size_t n : sizes) {
      local.model.n_trees = n;
      const auto result = train_model(local, train);
      BenchmarkEntry e;
      e.model = model_kind_name(kind);
      e.n_trees = n;
      e.n_stages = is_boosted(kind) ? local.model.n_stages : 1;
      e.seconds = result.seconds;
      entries.push_back(e);
      xs.push_back(static_cast<double>(n));
      ys.push_back(result.seconds);
    }
    if (xs.size() >= 2) {
      const auto f = fit_line(xs, ys);
      fits[model_kind_name(kind)] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
    }
  }
  json rows = json::array();
  for (const auto& e : entries)
    rows.push_back({{"model", e.model}, {"n_trees", e.n_trees}, {"n_stages", e.n_stages}, {"seconds", e.seconds}});
  if (entries_out) *entries_out = entries;
  return json{{"machine",
               {{"hardware_concurrency", std::thread::hardware_concurrency()},
                {"workers", resolve_workers(cfg.workers)},
                {"compiler", compiler_id()}}},
              {"n_train", train.size()},
              {"n_features", train.num_features()},
              {"entries", std::move(rows)},
              {"linear_fits", std::move(fits)}};
}

int cmd_train(const RunConfig& cfg) {
  const Dataset train = load_split(cfg, Provenance::Train);
  const auto result = train_model(cfg, train);
  fs::create_directories(cfg.output_dir);
  const fs::path model_path = fs::path(cfg.output_dir) / "model.json";
  save_model(result.model, model_path.string());

  json stages = json::array();
  for (const auto& s : result.stages) {
    const char* outcome = s.outcome == StageOutcome::Accept          ? "accept"
                          : s.outcome == StageOutcome::AcceptAndStop ? "accept_and_stop"
                                                                     : "reject";
    stages.push_back({{"stage", s.stage},
                      {"error", s.error},
                      {"alpha", s.alpha},
                      {"outcome", outcome},
                      {"master_error", s.master_error},
                      {"seconds", s.seconds}});
  }
  const json log{{"model", model_kind_name(cfg.model.kind)},
                 {"seed", cfg.seed},
                 {"workers", resolve_workers(cfg.workers)},
                 {"n_train", train.size()},
                 {"total_seconds", result.seconds},
                 {"stages", std::move(stages)}};
  write_json(fs::path(cfg.output_dir) / "train_log.json", log);
  std::cout << "trained " << model_kind_name(cfg.model.kind) << " on " << train.size() << " events in "
            << result.seconds << " s -> " << model_path.string() << '\n';
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& model_path, Provenance split) {
  const Model m = load_model(model_path);
  const Dataset d = load_split(cfg, split);
  const auto report = evaluate_model(m, d, cfg.percentile, provenance_name(split));
  fs::create_directories(cfg.output_dir);
  const json j = to_json(report);
  write_json(fs::path(cfg.output_dir) / (std::string("eval_") + provenance_name(split) + ".json"), j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_curves(const RunConfig& cfg, const std::string& model_path, Provenance split) {
  const Model m = load_model(model_path);
  const Dataset d = load_split(cfg, split);
  for (const auto& p : write_curves(cfg, m, d, provenance_name(split), cfg.output_dir)) std::cout << p << '\n';
  return 0;
}

int cmd_benchmark(const RunConfig& cfg) {
  const Dataset train = load_split(cfg, Provenance::Train);
  const json j = run_benchmark(cfg, train);
  fs::create_directories(cfg.output_dir);
  write_json(fs::path(cfg.output_dir) / "benchmark.json", j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_summary(const RunConfig& cfg, Provenance split) {
  const Dataset d = load_split(cfg, split);
  const std::string text = summary_json(summary(d));
  fs::create_directories(cfg.output_dir);
  std::ofstream out(fs::path(cfg.output_dir) / (std::string("summary_") + provenance_name(split) + ".json"));
  out << text << '\n';
  std::cout << text << '\n';
  return 0;
}

}  // namespace hepforest::run

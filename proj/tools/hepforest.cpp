#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hepforest/run.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<double> percentile;
  std::optional<std::string> out;
};

hepforest::run::RunConfig resolve(const Overrides& o) {
  hepforest::run::RunConfig cfg = o.config.empty() ? hepforest::run::RunConfig{} : hepforest::run::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.percentile) cfg.percentile = *o.percentile;
  if (o.out) cfg.output_dir = *o.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted tree ensembles (Tree, RF, ET, BDT, BRF, BXT) scored by approximate median significance"};
  app.footer("Config file (JSON) defaults; command-line flags override file values:\n" +
             hepforest::run::default_config_json().dump(2));
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Master random seed");
  app.add_option("--workers", o.workers, "Worker threads for tree training (0 = all cores)");
  app.add_option("--percentile", o.percentile, "Selection percentile for AMS (default 85)");
  app.add_option("--out", o.out, "Output directory");

  std::string model_path;
  std::string split_name = "test";

  auto* train = app.add_subcommand("train", "Fit the configured model on the training split");
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on a split and write an evaluation report");
  auto* curves = app.add_subcommand("curves", "Write significance, ROC, staged and correlation CSVs");
  auto* benchmark = app.add_subcommand("benchmark", "Time model training at several tree counts");
  auto* summary = app.add_subcommand("summary", "Write a JSON summary of a data split");
  for (auto* sub : {evaluate, curves}) {
    sub->add_option("--model", model_path, "Model artifact (default <out>/model.json)");
    sub->add_option("--split", split_name, "train, validation or test")->check(CLI::IsMember({"train", "validation", "test"}));
  }
  summary->add_option("--split", split_name, "train, validation or test")->check(CLI::IsMember({"train", "validation", "test"}));

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(o);
    const auto split = hepforest::parse_provenance(split_name);
    const std::string model = model_path.empty() ? cfg.output_dir + "/model.json" : model_path;
    if (*train) return hepforest::run::cmd_train(cfg);
    if (*evaluate) return hepforest::run::cmd_evaluate(cfg, model, split);
    if (*curves) return hepforest::run::cmd_curves(cfg, model, split);
    if (*benchmark) return hepforest::run::cmd_benchmark(cfg);
    if (*summary) return hepforest::run::cmd_summary(cfg, split);
  } catch (const std::exception& e) {
    std::cerr << "hepforest: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hepforest/dataset.hpp"
#include "hepforest/kinematics.hpp"
#include "hepforest/metrics.hpp"
#include "hepforest/model.hpp"
#include "hepforest/run.hpp"

namespace py = pybind11;
using namespace hepforest;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DoubleArray& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
  return {a.data(), a.data() + a.shape(0)};
}

std::vector<Label> to_labels(const IntArray& a) {
  if (a.ndim() != 1) throw std::invalid_argument("labels must be a 1-d array");
  std::vector<Label> out;
  out.reserve(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const auto v = a.data()[i];
    if (v != 0 && v != 1) throw std::invalid_argument("labels must be 0 (background) or 1 (signal)");
    out.push_back(v ? Label::Signal : Label::Background);
  }
  return out;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array(std::span<const double> v) { return to_array(std::vector<double>(v.begin(), v.end())); }

Dataset from_arrays(const DoubleArray& x, const IntArray& y, const DoubleArray& w,
                    std::vector<std::string> names) {
  if (x.ndim() != 2) throw std::invalid_argument("features must be a 2-d array");
  const auto n = static_cast<std::size_t>(x.shape(0));
  const auto f = static_cast<std::size_t>(x.shape(1));
  if (names.empty())
    for (std::size_t j = 0; j < f; ++j) names.push_back("f" + std::to_string(j));
  if (names.size() != f) throw std::invalid_argument("feature_names length does not match the feature columns");
  const auto labels = to_labels(y);
  const auto weights = to_vector(w);
  if (labels.size() != n || weights.size() != n) throw std::invalid_argument("labels and weights need one entry per row");
  Dataset d(std::move(names));
  d.reserve(n);
  std::vector<std::uint8_t> undefined(f);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> row(x.data() + i * f, f);
    bool any = false;
    for (std::size_t j = 0; j < f; ++j) {
      undefined[j] = std::isnan(row[j]) || row[j] == kUndefinedSentinel;
      any = any || undefined[j];
    }
    d.add(static_cast<std::int64_t>(i), row, weights[i], labels[i],
          any ? std::span<const std::uint8_t>(undefined) : std::span<const std::uint8_t>{});
  }
  return d;
}

py::array_t<double> features_of(const Dataset& d) {
  py::array_t<double> out({static_cast<py::ssize_t>(d.size()), static_cast<py::ssize_t>(d.num_features())});
  auto* p = out.mutable_data();
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.num_features(); ++j) *p++ = d.features()(i, j);
  return out;
}

py::array_t<std::int64_t> labels_of(const Dataset& d) {
  py::array_t<std::int64_t> out(static_cast<py::ssize_t>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) out.mutable_data()[i] = is_signal(d.labels()[i]) ? 1 : 0;
  return out;
}

py::array_t<double> scores_of(const Model& m, const Dataset& d) { return to_array(run::model_scores(m, run::prepare_for_model(m, d))); }

py::object parse(const std::string& s) { return py::module_::import("json").attr("loads")(s); }

run::RunConfig config_from(const std::string& json_text) { return run::config_from_json(nlohmann::json::parse(json_text)); }

}  // namespace

PYBIND11_MODULE(_hepforest, m) {
  m.doc() = "Tree ensembles and boosting for signal/background classification";

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&from_arrays), py::arg("features"), py::arg("labels"), py::arg("weights"),
           py::arg("feature_names") = std::vector<std::string>{})
      .def("__len__", &Dataset::size)
      .def_property_readonly("num_features", &Dataset::num_features)
      .def_property_readonly("feature_names", &Dataset::feature_names)
      .def_property_readonly("features", &features_of)
      .def_property_readonly("labels", &labels_of)
      .def_property_readonly("weights", [](const Dataset& d) { return to_array(d.weights()); })
      .def("summary", [](const Dataset& d) { return parse(summary_json(summary(d))); });

  m.def("load_csv", [](const std::string& path) { return load_csv(path, CsvSchema::higgs_opendata()); },
        py::arg("path"), "Loads a CSV laid out like the CERN Open Data HiggsML file.");
  m.def("_load_split", [](const std::string& config, const std::string& split) {
    return run::load_split(config_from(config), parse_provenance(split));
  });
  m.def("rebalance_weights", [](const Dataset& d) { return to_array(rebalance_weights(d).weights); });
  m.def("impute_median", [](const Dataset& train, const Dataset& target) {
    return apply_imputation(target, feature_medians(train));
  });

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", [](const Model& mod) { return std::string(model_kind_name(mod.kind)); })
      .def_property_readonly("feature_names", [](const Model& mod) { return mod.feature_names; })
      .def("score", &scores_of, py::arg("dataset"))
      .def("to_json", [](const Model& mod) { return to_json(mod).dump(); })
      .def_static("from_json", [](const std::string& s) { return model_from_json(nlohmann::json::parse(s)); })
      .def("save", [](const Model& mod, const std::string& path) { save_model(mod, path); })
      .def_static("load", &load_model);

  m.def("_train", [](const std::string& config, const Dataset& train) {
    auto result = run::train_model(config_from(config), train);
    py::list stages;
    for (const auto& s : result.stages)
      stages.append(py::dict(py::arg("stage") = s.stage, py::arg("error") = s.error, py::arg("alpha") = s.alpha,
                             py::arg("master_error") = s.master_error, py::arg("seconds") = s.seconds));
    return py::make_tuple(std::move(result.model), stages);
  });
  m.def("evaluate", [](const Model& mod, const Dataset& d, double percentile) {
    return parse(run::to_json(run::evaluate_model(mod, d, percentile, "custom")).dump());
  }, py::arg("model"), py::arg("dataset"), py::arg("percentile") = 85.0);

  auto metrics_mod = m.def_submodule("metrics");
  metrics_mod.def("ams", &metrics::ams_full, py::arg("shat"), py::arg("bhat"));
  metrics_mod.def("ams_simple", &metrics::ams_simple, py::arg("shat"), py::arg("bhat"));
  metrics_mod.def("sigma_to_pvalue", &metrics::sigma_to_pvalue);
  metrics_mod.def("pvalue_to_sigma", &metrics::pvalue_to_sigma);
  metrics_mod.def("threshold_at_percentile", [](const DoubleArray& s, double p) {
    return metrics::threshold_at_percentile(to_vector(s), p);
  });
  metrics_mod.def("balanced_error", [](const IntArray& pred, const IntArray& truth, const DoubleArray& w) {
    return metrics::balanced_error(to_labels(pred), to_labels(truth), to_vector(w));
  });
  metrics_mod.def("roc_auc", [](const DoubleArray& s, const IntArray& y, const DoubleArray& w) {
    return metrics::roc_auc(to_vector(s), to_labels(y), to_vector(w));
  });
  metrics_mod.def("significance_curve", [](const DoubleArray& s, const IntArray& y, const DoubleArray& w,
                                           const std::vector<double>& grid) {
    const auto curve = metrics::significance_curve(to_vector(s), to_labels(y), to_vector(w), grid);
    py::list points;
    for (const auto& p : curve.points)
      points.append(py::dict(py::arg("percentile") = p.percentile, py::arg("threshold") = p.threshold,
                             py::arg("shat") = p.shat, py::arg("bhat") = p.bhat, py::arg("selected") = p.selected,
                             py::arg("ams") = p.ams, py::arg("ams_simple") = p.ams_simple));
    py::object best = curve.best ? py::object(py::int_(*curve.best)) : py::object(py::none());
    return py::make_tuple(points, best);
  });

  auto kin = m.def_submodule("kinematics");
  kin.def("pseudorapidity", &kinematics::pseudorapidity);
  kin.def("transverse_momentum", &kinematics::transverse_momentum);
  kin.def("momentum_from_detector", &kinematics::momentum_from_detector);
  kin.def("invariant_mass", [](double px, double py_, double pz, double e) {
    return kinematics::invariant_mass({px, py_, pz, e});
  });

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
}

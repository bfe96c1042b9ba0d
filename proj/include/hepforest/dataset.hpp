#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hepforest/common.hpp"

namespace hepforest {

// Raw value that marks a feature as undefined for an event.
inline constexpr double kUndefinedSentinel = -999.0;

enum class Provenance : std::uint8_t { Train, Validation, Test, Custom };

const char* provenance_name(Provenance p);
Provenance parse_provenance(const std::string& name);

// Dense row-major matrix of feature values.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  void append_row(std::span<const double> values);
  void reserve_rows(std::size_t n) { values_.reserve(n * cols_); }

  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct Event {
  std::int64_t event_id = 0;
  std::vector<double> features;
  double weight = 0.0;
  Label label = Label::Background;
};

// Column-oriented event store. Undefined cells hold NaN in `features` and are
// flagged in the undefined mask; imputation replaces the value but keeps the
// mask for audit.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<std::string> feature_names,
                   Provenance provenance = Provenance::Custom);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t num_features() const { return feature_names_.size(); }

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  Provenance provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = p; }

  const FeatureMatrix& features() const { return features_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const Label> labels() const { return labels_; }
  std::span<const std::int64_t> ids() const { return ids_; }
  // Per-row split tag read from the split column; Custom when absent or unmapped.
  std::span<const Provenance> row_splits() const { return row_splits_; }

  bool undefined(std::size_t row, std::size_t col) const {
    return undefined_[row * num_features() + col] != 0;
  }
  std::span<const std::uint8_t> undefined_mask() const { return undefined_; }

  Event event(std::size_t i) const;

  // Appends one event. `undefined` may be empty (all defined) or of length F.
  // Cells flagged undefined are stored as NaN regardless of `features`.
  void add(std::int64_t id, std::span<const double> features, double weight, Label label,
           std::span<const std::uint8_t> undefined = {},
           Provenance row_split = Provenance::Custom);

  void reserve(std::size_t n);

  // Direct value write. Used by imputation; leaves the undefined mask alone.
  void set_value(std::size_t row, std::size_t col, double v) { features_(row, col) = v; }
  void set_weight(std::size_t row, double w);

  std::size_t count(Label l) const;
  double weight_sum(Label l) const;

  friend bool operator==(const Dataset&, const Dataset&);

 private:
  std::vector<std::string> feature_names_;
  Provenance provenance_ = Provenance::Custom;
  std::vector<std::int64_t> ids_;
  FeatureMatrix features_;
  std::vector<double> weights_;
  std::vector<Label> labels_;
  std::vector<std::uint8_t> undefined_;
  std::vector<Provenance> row_splits_;
};

// Column roles for CSV ingestion.
struct CsvSchema {
  std::string id_column = "EventId";
  std::string weight_column = "Weight";
  std::string label_column = "Label";
  // Optional column carrying the split tag of each row.
  std::string split_column;
  // Features in this order. Empty means every column that is not assigned a
  // role and not listed in `ignore_columns`, in file order.
  std::vector<std::string> feature_columns;
  std::vector<std::string> ignore_columns;
  std::vector<std::string> signal_tokens = {"s"};
  std::vector<std::string> background_tokens = {"b"};
  // Split tag value -> provenance.
  std::map<std::string, Provenance> split_values;

  // Layout of the public ATLAS Higgs challenge file: KaggleSet column with
  // t/b/v, KaggleWeight as the per-split weight, Weight ignored.
  static CsvSchema higgs_opendata();
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);

// Rows whose split tag equals `which`, in file order. The result carries
// `which` as its provenance.
Dataset select_split(const Dataset& d, Provenance which);

// Rows [begin, end) in order.
Dataset take_rows(const Dataset& d, std::size_t begin, std::size_t end,
                  Provenance provenance = Provenance::Custom);

Dataset take_rows(const Dataset& d, std::span<const std::size_t> rows,
                  Provenance provenance = Provenance::Custom);

// Median over defined cells of `train`, one entry per feature. Throws if a
// feature has no defined value.
std::vector<double> feature_medians(const Dataset& train);

// Replaces undefined cells with the given per-feature fill values.
Dataset apply_imputation(const Dataset& d, std::span<const double> fill);

// Fits medians on `train` and fills every target with them.
std::vector<Dataset> impute_median(const Dataset& train, const std::vector<Dataset>& targets);

struct BalancedWeights {
  std::vector<double> weights;
};

BalancedWeights rebalance_weights(const Dataset& d);

// Rescales raw weights per class so class sums equal the targets.
Dataset rescale_class_weights(const Dataset& d, double signal_total, double background_total);

struct FeatureSummary {
  std::string name;
  double undefined_fraction = 0.0;
  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> median;
};

struct DatasetSummary {
  std::size_t n = 0;
  std::size_t n_signal = 0;
  std::size_t n_background = 0;
  double weight_signal = 0.0;
  double weight_background = 0.0;
  std::vector<FeatureSummary> features;
};

DatasetSummary summary(const Dataset& d);

std::string summary_json(const DatasetSummary& s);

// Median of a non-empty sample: middle element, or the mean of the two
// middle elements for even counts.
double median_of(std::vector<double> values);

}  // namespace hepforest

#include "hepforest/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace hepforest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

[[noreturn]] void cell_error(const std::string& path, std::size_t line, const std::string& column,
                             const std::string& what) {
  std::ostringstream os;
  os << path << ": row " << line << ", column '" << column << "': " << what;
  throw DataError(os.str());
}

}  // namespace

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Train: return "train";
    case Provenance::Validation: return "validation";
    case Provenance::Test: return "test";
    case Provenance::Custom: return "custom";
  }
  return "custom";
}

Provenance parse_provenance(const std::string& name) {
  if (name == "train") return Provenance::Train;
  if (name == "validation") return Provenance::Validation;
  if (name == "test") return Provenance::Test;
  if (name == "custom") return Provenance::Custom;
  throw ConfigError("unknown split '" + name + "' (expected train, validation, test or custom)");
}

void FeatureMatrix::append_row(std::span<const double> values) {
  if (values.size() != cols_) throw std::invalid_argument("FeatureMatrix: row width mismatch");
  values_.insert(values_.end(), values.begin(), values.end());
  ++rows_;
}

Dataset::Dataset(std::vector<std::string> feature_names, Provenance provenance)
    : feature_names_(std::move(feature_names)),
      provenance_(provenance),
      features_(0, feature_names_.size()) {}

Event Dataset::event(std::size_t i) const {
  const auto r = features_.row(i);
  return Event{ids_[i], std::vector<double>(r.begin(), r.end()), weights_[i], labels_[i]};
}

void Dataset::reserve(std::size_t n) {
  ids_.reserve(n);
  features_.reserve_rows(n);
  weights_.reserve(n);
  labels_.reserve(n);
  undefined_.reserve(n * num_features());
  row_splits_.reserve(n);
}

void Dataset::add(std::int64_t id, std::span<const double> features, double weight, Label label,
                  std::span<const std::uint8_t> undefined, Provenance row_split) {
  const std::size_t f = num_features();
  if (features.size() != f) throw DataError("event feature count does not match dataset");
  if (!undefined.empty() && undefined.size() != f)
    throw DataError("undefined mask width does not match dataset");
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw DataError("event weight must be finite and >= 0");
  ids_.push_back(id);
  features_.append_row(features);
  const std::size_t row = ids_.size() - 1;
  for (std::size_t j = 0; j < f; ++j) {
    const bool undef = !undefined.empty() && undefined[j] != 0;
    undefined_.push_back(undef ? 1 : 0);
    if (undef) features_(row, j) = kNaN;
  }
  weights_.push_back(weight);
  labels_.push_back(label);
  row_splits_.push_back(row_split);
}

void Dataset::set_weight(std::size_t row, double w) {
  if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("event weight must be finite and >= 0");
  weights_[row] = w;
}

std::size_t Dataset::count(Label l) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), l));
}

double Dataset::weight_sum(Label l) const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    if (labels_[i] == l) s += weights_[i];
  return s;
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.feature_names_ != b.feature_names_ || a.provenance_ != b.provenance_ ||
      a.ids_ != b.ids_ || a.weights_ != b.weights_ || a.labels_ != b.labels_ ||
      a.undefined_ != b.undefined_ || a.row_splits_ != b.row_splits_)
    return false;
  // NaN-aware bitwise comparison of feature values.
  const auto& va = a.features_.values();
  const auto& vb = b.features_.values();
  if (va.size() != vb.size()) return false;
  for (std::size_t i = 0; i < va.size(); ++i) {
    if (std::isnan(va[i]) && std::isnan(vb[i])) continue;
    if (va[i] != vb[i]) return false;
  }
  return true;
}

CsvSchema CsvSchema::higgs_opendata() {
  CsvSchema s;
  s.id_column = "EventId";
  s.weight_column = "KaggleWeight";
  s.label_column = "Label";
  s.split_column = "KaggleSet";
  s.ignore_columns = {"Weight"};
  s.split_values = {{"t", Provenance::Train},
                    {"b", Provenance::Validation},
                    {"v", Provenance::Test},
                    {"u", Provenance::Custom}};
  return s;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(trim(f));

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!index.emplace(header[c], c).second)
      throw DataError(path + ": duplicate header column '" + header[c] + "'");
  }
  auto require = [&](const std::string& name, const char* role) {
    const auto it = index.find(name);
    if (it == index.end())
      throw DataError(path + ": missing " + std::string(role) + " column '" + name + "'");
    return it->second;
  };
  const std::size_t id_col = require(schema.id_column, "id");
  const std::size_t weight_col = require(schema.weight_column, "weight");
  const std::size_t label_col = require(schema.label_column, "label");
  std::optional<std::size_t> split_col;
  if (!schema.split_column.empty()) split_col = require(schema.split_column, "split");

  std::set<std::string> reserved = {schema.id_column, schema.weight_column, schema.label_column};
  if (split_col) reserved.insert(schema.split_column);
  if (reserved.size() != (split_col ? 4u : 3u))
    throw ConfigError("schema assigns one column to more than one role");

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  if (!schema.feature_columns.empty()) {
    std::set<std::string> seen;
    for (const auto& name : schema.feature_columns) {
      if (reserved.count(name))
        throw ConfigError("column '" + name + "' cannot be both a feature and a role column");
      if (!seen.insert(name).second) throw ConfigError("feature column '" + name + "' listed twice");
      feature_cols.push_back(require(name, "feature"));
      feature_names.push_back(name);
    }
  } else {
    const std::set<std::string> ignored(schema.ignore_columns.begin(), schema.ignore_columns.end());
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (reserved.count(header[c]) || ignored.count(header[c])) continue;
      feature_cols.push_back(c);
      feature_names.push_back(header[c]);
    }
  }

  Dataset d(feature_names);
  std::vector<double> values(feature_cols.size());
  std::vector<std::uint8_t> undef(feature_cols.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      std::ostringstream os;
      os << path << ": row " << line_no << ": expected " << header.size() << " fields, got "
         << fields.size();
      throw DataError(os.str());
    }
    const auto id = parse_double(fields[id_col]);
    if (!id || *id != std::floor(*id)) cell_error(path, line_no, header[id_col], "non-integer id");

    const auto w = parse_double(fields[weight_col]);
    if (!w || !std::isfinite(*w)) cell_error(path, line_no, header[weight_col], "non-numeric weight");
    if (*w < 0.0) cell_error(path, line_no, header[weight_col], "negative weight");

    const std::string token(trim(fields[label_col]));
    Label label;
    if (std::find(schema.signal_tokens.begin(), schema.signal_tokens.end(), token) !=
        schema.signal_tokens.end())
      label = Label::Signal;
    else if (std::find(schema.background_tokens.begin(), schema.background_tokens.end(), token) !=
             schema.background_tokens.end())
      label = Label::Background;
    else
      cell_error(path, line_no, header[label_col], "unknown label token '" + token + "'");

    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto v = parse_double(fields[feature_cols[j]]);
      if (!v) cell_error(path, line_no, header[feature_cols[j]], "non-numeric feature value");
      undef[j] = (*v == kUndefinedSentinel) ? 1 : 0;
      values[j] = *v;
    }

    Provenance split = Provenance::Custom;
    if (split_col) {
      const std::string tag(trim(fields[*split_col]));
      const auto it = schema.split_values.find(tag);
      if (it != schema.split_values.end()) split = it->second;
    }
    d.add(static_cast<std::int64_t>(*id), values, *w, label, undef, split);
  }
  return d;
}

Dataset take_rows(const Dataset& d, std::span<const std::size_t> rows, Provenance provenance) {
  Dataset out(d.feature_names(), provenance);
  out.reserve(rows.size());
  const std::size_t f = d.num_features();
  const auto mask = d.undefined_mask();
  for (const std::size_t r : rows) {
    if (r >= d.size()) throw std::out_of_range("take_rows: row index out of range");
    out.add(d.ids()[r], d.features().row(r), d.weights()[r], d.labels()[r],
            mask.subspan(r * f, f), d.row_splits()[r]);
  }
  return out;
}

Dataset take_rows(const Dataset& d, std::size_t begin, std::size_t end, Provenance provenance) {
  if (begin > end || end > d.size()) throw std::out_of_range("take_rows: invalid row range");
  std::vector<std::size_t> rows(end - begin);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = begin + i;
  return take_rows(d, rows, provenance);
}

Dataset select_split(const Dataset& d, Provenance which) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.row_splits()[i] == which) rows.push_back(i);
  return take_rows(d, rows, which);
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median_of: empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

std::vector<double> feature_medians(const Dataset& train) {
  if (train.empty()) throw DataError("imputation requires a non-empty training set");
  std::vector<double> medians(train.num_features());
  std::vector<double> column;
  column.reserve(train.size());
  for (std::size_t j = 0; j < train.num_features(); ++j) {
    column.clear();
    for (std::size_t i = 0; i < train.size(); ++i)
      if (!train.undefined(i, j)) column.push_back(train.features()(i, j));
    if (column.empty())
      throw DataError("feature '" + train.feature_names()[j] + "' is undefined in every training row");
    medians[j] = median_of(column);
  }
  return medians;
}

Dataset apply_imputation(const Dataset& d, std::span<const double> fill) {
  if (fill.size() != d.num_features()) throw DataError("imputation width does not match dataset");
  Dataset out = d;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.num_features(); ++j)
      if (d.undefined(i, j)) out.set_value(i, j, fill[j]);
  return out;
}

std::vector<Dataset> impute_median(const Dataset& train, const std::vector<Dataset>& targets) {
  for (const auto& t : targets)
    if (t.feature_names() != train.feature_names())
      throw DataError("imputation targets must share the training feature names");
  const auto medians = feature_medians(train);
  std::vector<Dataset> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(apply_imputation(t, medians));
  return out;
}

BalancedWeights rebalance_weights(const Dataset& d) {
  const double ns = d.weight_sum(Label::Signal);
  const double nb = d.weight_sum(Label::Background);
  if (!(ns > 0.0)) throw DataError("rebalance: signal class has zero total weight");
  if (!(nb > 0.0)) throw DataError("rebalance: background class has zero total weight");
  BalancedWeights out;
  out.weights.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    out.weights[i] = d.weights()[i] / (2.0 * (is_signal(d.labels()[i]) ? ns : nb));
  return out;
}

Dataset rescale_class_weights(const Dataset& d, double signal_total, double background_total) {
  const double ns = d.weight_sum(Label::Signal);
  const double nb = d.weight_sum(Label::Background);
  if (!(ns > 0.0) || !(nb > 0.0)) throw DataError("rescale: both classes need positive total weight");
  Dataset out = d;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const bool s = is_signal(d.labels()[i]);
    out.set_weight(i, d.weights()[i] * (s ? signal_total / ns : background_total / nb));
  }
  return out;
}

DatasetSummary summary(const Dataset& d) {
  DatasetSummary s;
  s.n = d.size();
  s.n_signal = d.count(Label::Signal);
  s.n_background = d.count(Label::Background);
  s.weight_signal = d.weight_sum(Label::Signal);
  s.weight_background = d.weight_sum(Label::Background);
  std::vector<double> column;
  for (std::size_t j = 0; j < d.num_features(); ++j) {
    FeatureSummary f;
    f.name = d.feature_names()[j];
    column.clear();
    std::size_t undefined = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.undefined(i, j)) {
        ++undefined;
        continue;
      }
      column.push_back(d.features()(i, j));
    }
    f.undefined_fraction = d.empty() ? 0.0 : static_cast<double>(undefined) / static_cast<double>(d.size());
    if (!column.empty()) {
      const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
      f.min = *lo;
      f.max = *hi;
      f.median = median_of(column);
    }
    s.features.push_back(std::move(f));
  }
  return s;
}

std::string summary_json(const DatasetSummary& s) {
  nlohmann::json j;
  j["n"] = s.n;
  j["n_signal"] = s.n_signal;
  j["n_background"] = s.n_background;
  j["weight_signal"] = s.weight_signal;
  j["weight_background"] = s.weight_background;
  auto features = nlohmann::json::array();
  for (const auto& f : s.features) {
    nlohmann::json e;
    e["name"] = f.name;
    e["undefined_fraction"] = f.undefined_fraction;
    e["min"] = f.min ? nlohmann::json(*f.min) : nlohmann::json(nullptr);
    e["max"] = f.max ? nlohmann::json(*f.max) : nlohmann::json(nullptr);
    e["median"] = f.median ? nlohmann::json(*f.median) : nlohmann::json(nullptr);
    features.push_back(std::move(e));
  }
  j["features"] = std::move(features);
  return j.dump(2);
}

}  // namespace hepforest

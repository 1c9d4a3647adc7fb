#include "ascf/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "ascf/error.hpp"
#include "ascf/rng.hpp"

namespace ascf {

namespace {

std::vector<std::string> string_list(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw Error(ErrorKind::manifest, std::string("missing key '") + key + "'");
  const auto& value = doc.at(key);
  if (!value.is_array()) {
    throw Error(ErrorKind::manifest, std::string("key '") + key + "' must be a list of column names");
  }
  std::vector<std::string> out;
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw Error(ErrorKind::manifest, std::string("key '") + key + "' must contain strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::optional<std::string> optional_scalar(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  const auto& value = doc.at(key);
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  throw Error(ErrorKind::manifest, std::string("key '") + key + "' must be a string");
}

bool is_missing(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty() || cell == "?") return true;
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower == "na" || lower == "nan";
}

}  // namespace

FeatureManifest FeatureManifest::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::manifest, "manifest must be a JSON object");
  FeatureManifest m;
  m.selection = string_list(doc, "selection");
  m.classification = string_list(doc, "classification");
  if (!doc.contains("label")) throw Error(ErrorKind::manifest, "missing key 'label'");
  if (!doc.at("label").is_string()) throw Error(ErrorKind::manifest, "key 'label' must be a string");
  m.label = doc.at("label").get<std::string>();
  m.positive_label = optional_scalar(doc, "positive_label");
  m.id = optional_scalar(doc, "id");
  m.validate();
  return m;
}

FeatureManifest FeatureManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::manifest, path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

nlohmann::json FeatureManifest::to_json() const {
  nlohmann::json doc;
  doc["selection"] = selection;
  doc["classification"] = classification;
  doc["label"] = label;
  doc["positive_label"] = positive_label ? nlohmann::json(*positive_label) : nlohmann::json(nullptr);
  doc["id"] = id ? nlohmann::json(*id) : nlohmann::json(nullptr);
  return doc;
}

void FeatureManifest::validate() const {
  if (selection.empty()) throw Error(ErrorKind::manifest, "key 'selection' needs at least one column");
  if (classification.empty()) {
    throw Error(ErrorKind::manifest, "key 'classification' needs at least one column");
  }
  if (label.empty()) throw Error(ErrorKind::manifest, "key 'label' is empty");
  std::set<std::string> seen;
  auto claim = [&](const std::string& column, const char* role) {
    if (!seen.insert(column).second) {
      throw Error(ErrorKind::manifest,
                  "column '" + column + "' assigned to more than one role (" + role + ")");
    }
  };
  for (const auto& c : selection) claim(c, "selection");
  for (const auto& c : classification) claim(c, "classification");
  claim(label, "label");
  if (id) claim(*id, "id");
}

MissingPolicy parse_missing_policy(std::string_view text) {
  if (text == "reject") return MissingPolicy::reject;
  if (text == "drop") return MissingPolicy::drop;
  throw Error(ErrorKind::precondition, "missing policy must be 'reject' or 'drop'");
}

std::string LoadReport::summary() const {
  std::string out = std::to_string(rows_read) + " rows read, " +
                    std::to_string(dropped_rows.size()) +
                    (dropped_rows.size() == 1 ? " row dropped" : " rows dropped");
  if (!dropped_rows.empty()) {
    out += " (";
    for (std::size_t i = 0; i < dropped_rows.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(dropped_rows[i]);
    }
    out += ")";
  }
  return out;
}

Dataset::Dataset(std::vector<std::string> ids, Eigen::MatrixXd z, Eigen::MatrixXd x,
                 std::vector<int> y, std::string positive_label, std::string negative_label)
    : ids_(std::move(ids)),
      z_(std::move(z)),
      x_(std::move(x)),
      y_(std::move(y)),
      positive_label_(std::move(positive_label)),
      negative_label_(std::move(negative_label)) {
  const auto n = static_cast<Eigen::Index>(ids_.size());
  if (z_.rows() != n || x_.rows() != n || static_cast<Eigen::Index>(y_.size()) != n) {
    throw Error(ErrorKind::shape, "ids, z, x and y must have the same number of rows");
  }
  if (n > 0 && (z_.cols() < 1 || x_.cols() < 1)) {
    throw Error(ErrorKind::shape, "need at least one selection and one classification feature");
  }
  for (int label : y_) {
    if (label != 0 && label != 1) throw Error(ErrorKind::label, "labels must be 0 or 1");
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw Error(ErrorKind::parse, "duplicate id '" + ids_[i] + "'");
    }
  }
}

std::size_t Dataset::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw Error(ErrorKind::unknown_id, "no instance with id '" + std::string(id) + "'");
  return it->second;
}

bool Dataset::contains(std::string_view id) const { return index_.contains(std::string(id)); }

LabelMapping resolve_labels(std::span<const std::string> values,
                            const std::optional<std::string>& declared_positive) {
  std::set<std::string> distinct(values.begin(), values.end());
  if (distinct.size() < 2) {
    throw Error(ErrorKind::label, "need two distinct label values, found " + std::to_string(distinct.size()));
  }
  if (distinct.size() > 2) {
    throw Error(ErrorKind::label,
                "binary labels required, found " + std::to_string(distinct.size()) + " distinct values");
  }
  LabelMapping mapping{*distinct.rbegin(), *distinct.begin()};
  if (declared_positive) {
    if (!distinct.contains(*declared_positive)) {
      throw Error(ErrorKind::label, "positive_label '" + *declared_positive + "' not present in the data");
    }
    mapping.positive = *declared_positive;
    mapping.negative = *declared_positive == *distinct.begin() ? *distinct.rbegin() : *distinct.begin();
  }
  return mapping;
}

Dataset load_dataset(const std::filesystem::path& data_path, const FeatureManifest& manifest,
                     MissingPolicy policy) {
  return load_dataset(read_csv(data_path), manifest, policy);
}

Dataset load_dataset(const CsvTable& table, const FeatureManifest& manifest, MissingPolicy policy) {
  manifest.validate();
  auto locate = [&](const std::string& name) {
    auto pos = table.column(name);
    if (!pos) throw Error(ErrorKind::manifest, "column '" + name + "' not found in the data header");
    return *pos;
  };
  std::vector<std::size_t> sel_cols, cls_cols;
  for (const auto& c : manifest.selection) sel_cols.push_back(locate(c));
  for (const auto& c : manifest.classification) cls_cols.push_back(locate(c));
  const std::size_t label_col = locate(manifest.label);
  const std::optional<std::size_t> id_col =
      manifest.id ? std::optional<std::size_t>(locate(*manifest.id)) : std::nullopt;

  std::vector<std::size_t> declared = sel_cols;
  declared.insert(declared.end(), cls_cols.begin(), cls_cols.end());
  declared.push_back(label_col);
  if (id_col) declared.push_back(*id_col);

  LoadReport report;
  report.rows_read = table.rows.size();
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const bool missing = std::any_of(declared.begin(), declared.end(),
                                     [&](std::size_t c) { return is_missing(row[c]); });
    if (!missing) {
      kept.push_back(r);
      continue;
    }
    if (policy == MissingPolicy::reject) {
      throw Error(ErrorKind::missing_value, "row " + std::to_string(r + 1) +
                                                " has a missing value in a declared column");
    }
    report.dropped_rows.push_back(r + 1);
  }

  const auto n = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(sel_cols.size()));
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cls_cols.size()));
  std::vector<std::string> ids, raw_labels;
  ids.reserve(kept.size());
  raw_labels.reserve(kept.size());

  auto numeric = [&](std::size_t r, std::size_t c) {
    auto value = parse_double(table.rows[r][c]);
    if (!value || !std::isfinite(*value)) {
      throw Error(ErrorKind::parse, "row " + std::to_string(r + 1) + ", column '" + table.header[c] +
                                        "': non-numeric value '" + table.rows[r][c] + "'");
    }
    return *value;
  };

  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t r = kept[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < sel_cols.size(); ++j) z(i, static_cast<Eigen::Index>(j)) = numeric(r, sel_cols[j]);
    for (std::size_t j = 0; j < cls_cols.size(); ++j) x(i, static_cast<Eigen::Index>(j)) = numeric(r, cls_cols[j]);
    raw_labels.emplace_back(trim(table.rows[r][label_col]));
    ids.push_back(id_col ? std::string(trim(table.rows[r][*id_col])) : std::to_string(r));
  }

  const LabelMapping mapping = resolve_labels(raw_labels, manifest.positive_label);
  std::vector<int> y(raw_labels.size());
  for (std::size_t i = 0; i < raw_labels.size(); ++i) y[i] = raw_labels[i] == mapping.positive ? 1 : 0;

  Dataset dataset(std::move(ids), std::move(z), std::move(x), std::move(y), mapping.positive,
                  mapping.negative);
  dataset.manifest = manifest;
  dataset.report = std::move(report);
  return dataset;
}

SplitPlan make_splits(std::span<const int> labels, int repeats, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::precondition, "k must be at least 2");
  if (repeats < 1) throw Error(ErrorKind::precondition, "repeats must be at least 1");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] == 1 ? 1 : 0].push_back(i);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorKind::stratification, "class " + std::to_string(c) + " has " +
                                                 std::to_string(by_class[c].size()) +
                                                 " members, fewer than k = " + std::to_string(k));
    }
  }

  SplitPlan plan{repeats, k, seed, {}};
  plan.assignments.reserve(static_cast<std::size_t>(repeats * k));
  const auto uk = static_cast<std::size_t>(k);
  for (int r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(seed, 0x5b117ULL, static_cast<std::uint64_t>(r)));
    // deal each shuffled class round-robin, continuing the fold counter
    // across classes so fold sizes also differ by at most one
    std::vector<std::size_t> fold_of(labels.size());
    std::size_t position = 0;
    for (auto& members : by_class) {
      std::vector<std::size_t> order = members;
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t id : order) fold_of[id] = position++ % uk;
    }
    for (std::size_t f = 0; f < uk; ++f) {
      Fold fold;
      for (std::size_t i = 0; i < labels.size(); ++i) (fold_of[i] == f ? fold.test : fold.train).push_back(i);
      plan.assignments.push_back(std::move(fold));
    }
  }
  return plan;
}

SplitPlan make_splits(const Dataset& dataset, int repeats, int k, std::uint64_t seed) {
  return make_splits(std::span<const int>(dataset.y()), repeats, k, seed);
}

AcquisitionState::AcquisitionState(std::vector<std::size_t> train_pool) : candidates_(std::move(train_pool)) {
  std::sort(candidates_.begin(), candidates_.end());
  if (std::adjacent_find(candidates_.begin(), candidates_.end()) != candidates_.end()) {
    throw Error(ErrorKind::precondition, "train pool contains duplicate rows");
  }
}

bool AcquisitionState::is_candidate(std::size_t row) const {
  return std::binary_search(candidates_.begin(), candidates_.end(), row);
}

std::vector<std::size_t> AcquisitionState::acquired_sorted() const {
  std::vector<std::size_t> rows;
  rows.reserve(revealed_.size());
  for (const auto& [row, x] : revealed_) rows.push_back(row);
  return rows;
}

Eigen::MatrixXd AcquisitionState::revealed_matrix() const {
  if (revealed_.empty()) return {};
  const Eigen::Index d = revealed_.begin()->second.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(revealed_.size()), d);
  Eigen::Index i = 0;
  for (const auto& [row, x] : revealed_) out.row(i++) = x.transpose();
  return out;
}

AcquisitionState acquire(AcquisitionState state, std::size_t row,
                         const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (state.revealed_.contains(row)) {
    throw Error(ErrorKind::already_acquired, "row " + std::to_string(row) + " was already acquired");
  }
  auto it = std::lower_bound(state.candidates_.begin(), state.candidates_.end(), row);
  if (it == state.candidates_.end() || *it != row) {
    throw Error(ErrorKind::invalid_acquisition, "row " + std::to_string(row) + " is not a candidate");
  }
  if (!state.revealed_.empty() && state.revealed_.begin()->second.size() != x.size()) {
    throw Error(ErrorKind::shape, "classification vector length differs from earlier acquisitions");
  }
  state.candidates_.erase(it);
  state.acquired_.push_back(row);
  state.revealed_.emplace(row, Eigen::VectorXd(x));
  return state;
}

AcquisitionState acquire(AcquisitionState state, std::size_t row, const Dataset& dataset) {
  if (row >= dataset.size()) {
    throw Error(ErrorKind::invalid_acquisition, "row " + std::to_string(row) + " outside the dataset");
  }
  return acquire(std::move(state), row, dataset.x().row(static_cast<Eigen::Index>(row)).transpose());
}

AcquisitionState acquire(AcquisitionState state, std::string_view id, const Dataset& dataset) {
  return acquire(std::move(state), dataset.index_of(id), dataset);
}

}  // namespace ascf

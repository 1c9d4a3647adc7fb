#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "ascf/csv.hpp"

namespace ascf {

/// Role assignment of the CSV columns: cheap selection features (z), expensive
/// classification features (x), the binary label (y) and an optional id.
struct FeatureManifest {
  std::vector<std::string> selection;
  std::vector<std::string> classification;
  std::string label;
  std::optional<std::string> positive_label;
  std::optional<std::string> id;

  /// Throws ErrorKind::manifest naming the offending key.
  static FeatureManifest from_json(const nlohmann::json& doc);
  static FeatureManifest load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Role sets nonempty and pairwise disjoint.
  void validate() const;
};

enum class MissingPolicy { reject, drop };

MissingPolicy parse_missing_policy(std::string_view text);

struct LoadReport {
  std::size_t rows_read = 0;
  /// 1-based data row numbers (header excluded) that were dropped.
  std::vector<std::size_t> dropped_rows;

  std::string summary() const;
};

/// Instances with their selection vector z, ground-truth classification vector
/// x and binary label y (1 = positive class). Rows of `z`, `x`, `y` and `ids`
/// are aligned. Immutable after construction; x is only ever read through
/// `acquire`, never by a strategy directly.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> ids, Eigen::MatrixXd z, Eigen::MatrixXd x, std::vector<int> y,
          std::string positive_label = "1", std::string negative_label = "0");

  std::size_t size() const noexcept { return ids_.size(); }
  Eigen::Index selection_dim() const noexcept { return z_.cols(); }
  Eigen::Index classification_dim() const noexcept { return x_.cols(); }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Eigen::MatrixXd& z() const noexcept { return z_; }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  const std::vector<int>& y() const noexcept { return y_; }

  const std::string& positive_label() const noexcept { return positive_label_; }
  const std::string& negative_label() const noexcept { return negative_label_; }

  /// Row position of an id; throws ErrorKind::unknown_id.
  std::size_t index_of(std::string_view id) const;
  bool contains(std::string_view id) const;

  FeatureManifest manifest;
  LoadReport report;

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd z_;
  Eigen::MatrixXd x_;
  std::vector<int> y_;
  std::string positive_label_;
  std::string negative_label_;
  std::unordered_map<std::string, std::size_t> index_;
};

Dataset load_dataset(const std::filesystem::path& data_path, const FeatureManifest& manifest,
                     MissingPolicy policy = MissingPolicy::reject);
Dataset load_dataset(const CsvTable& table, const FeatureManifest& manifest,
                     MissingPolicy policy = MissingPolicy::reject);

/// Resolves the binary label mapping. With no declared positive label the
/// lexicographically larger value is positive.
struct LabelMapping {
  std::string positive;
  std::string negative;
};
LabelMapping resolve_labels(std::span<const std::string> values,
                            const std::optional<std::string>& declared_positive);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// repeats x k stratified train/test assignments, stored repeat-major.
struct SplitPlan {
  int repeats = 0;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<Fold> assignments;

  const Fold& at(int repeat, int fold) const {
    return assignments[static_cast<std::size_t>(repeat * k + fold)];
  }
};

SplitPlan make_splits(std::span<const int> labels, int repeats, int k, std::uint64_t seed);
SplitPlan make_splits(const Dataset& dataset, int repeats, int k, std::uint64_t seed);

/// Pools A (acquired, in acquisition order) and S (candidates) over a fixed
/// train pool, plus the classification vectors revealed so far.
class AcquisitionState {
 public:
  AcquisitionState() = default;
  explicit AcquisitionState(std::vector<std::size_t> train_pool);

  const std::vector<std::size_t>& acquired() const noexcept { return acquired_; }
  /// Sorted ascending.
  const std::vector<std::size_t>& candidates() const noexcept { return candidates_; }
  const std::map<std::size_t, Eigen::VectorXd>& revealed_x() const noexcept { return revealed_; }

  std::size_t pool_size() const noexcept { return acquired_.size() + candidates_.size(); }
  bool is_candidate(std::size_t row) const;
  bool is_acquired(std::size_t row) const { return revealed_.contains(row); }

  /// Acquired rows in ascending row order, the canonical order for fitting.
  std::vector<std::size_t> acquired_sorted() const;

  /// Revealed x of the acquired rows, stacked in acquired_sorted() order.
  Eigen::MatrixXd revealed_matrix() const;

  friend AcquisitionState acquire(AcquisitionState state, std::size_t row,
                                  const Eigen::Ref<const Eigen::VectorXd>& x);

 private:
  std::vector<std::size_t> acquired_;
  std::vector<std::size_t> candidates_;
  std::map<std::size_t, Eigen::VectorXd> revealed_;
};

/// Moves `row` from S to A and reveals its x. Throws already_acquired if the
/// row is in A, invalid_acquisition if it was never a candidate.
AcquisitionState acquire(AcquisitionState state, std::size_t row,
                         const Eigen::Ref<const Eigen::VectorXd>& x);
AcquisitionState acquire(AcquisitionState state, std::size_t row, const Dataset& dataset);
AcquisitionState acquire(AcquisitionState state, std::string_view id, const Dataset& dataset);

}  // namespace ascf

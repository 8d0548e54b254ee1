#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfl {

/// Immutable sample table: row-major feature matrix plus binary labels.
/// Label 1 flags an anomaly. Construction validates that every feature is
/// finite, labels are in {0, 1} and the shapes line up.
class Dataset {
 public:
  Dataset(std::vector<double> features, std::vector<std::uint8_t> labels,
          std::vector<std::string> feature_names);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }

  double at(std::size_t row, std::size_t col) const {
    return features_[row * n_cols_ + col];
  }
  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * n_cols_, n_cols_};
  }
  std::uint8_t label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  const std::vector<double>& features() const { return features_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  std::size_t count_label(std::uint8_t value) const;

  /// New dataset holding the given rows (in the given order).
  Dataset select_rows(std::span<const std::size_t> rows) const;

 private:
  std::vector<double> features_;
  std::vector<std::uint8_t> labels_;
  std::vector<std::string> feature_names_;
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
};

struct SplitPair {
  Dataset train;
  Dataset test;
};

/// Feature-only table for scoring unlabeled CSVs.
struct FeatureTable {
  std::vector<double> features;  // row-major
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::string> names;
};

/// Loads an RFC-4180-style CSV (header row mandatory, UTF-8, comma
/// delimiter, optional quoting). Numeric columns are parsed as reals;
/// non-numeric columns are one-hot encoded with one indicator column per
/// distinct value in lexicographic order, named "col=value". Rows whose
/// label equals `positive_label` get label 1, all others 0.
///
/// `label_column` is resolved by header name first, then as a 0-based
/// column index if it is all digits.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::string& positive_label);

/// Same parser/encoder without a label requirement. If `drop_column` is
/// non-empty and present, that column is excluded from the features.
FeatureTable load_csv_features(const std::string& path,
                               const std::string& drop_column = "");

/// Writes the dataset back out as CSV. Labels go to `label_column` as 0/1,
/// so `load_csv(path, label_column, "1")` round-trips exactly.
void save_csv(const Dataset& d, const std::string& path,
              const std::string& label_column = "label");

/// Downsamples the minority class (without replacement) so its fraction is
/// at most `target_minority_frac`, keeping every majority row. Returns the
/// dataset unchanged when the minority is already at or under the target.
/// Minority rows kept: floor(target * n_maj / (1 - target)).
Dataset stratified_subsample(const Dataset& d, double target_minority_frac,
                             std::uint64_t rng_seed);

/// Splits into train/test with train size round(train_frac * n). When
/// stratified, each class is split at the same rate (within one sample).
SplitPair train_test_split(const Dataset& d, double train_frac,
                           std::uint64_t rng_seed, bool stratified);

}  // namespace mfl

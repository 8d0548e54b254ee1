#include "mfl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mfl/errors.hpp"
#include "mfl/rng.hpp"

namespace mfl {

namespace {

constexpr std::size_t kMaxCategoricalValues = 1000;

std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

bool parse_real(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;  // from_chars rejects leading '+'
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && first != last;
}

// RFC-4180-style record reader: quoted fields may contain commas, escaped
// quotes ("") and newlines. Blank lines outside quotes are skipped.
std::vector<std::vector<std::string>> read_csv_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && trimmed(record[0]).empty();
    if (!blank) records.push_back(record);
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;  // a delimiter implies a following field
        break;
      case '\n':
        end_record();
        break;
      case '\r':
        break;  // handled as part of CRLF / ignored
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field in " + path);
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

std::size_t resolve_column(const std::vector<std::string>& header,
                           const std::string& label_column,
                           const std::string& path) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == label_column) return j;
  }
  // fall back to a 0-based index
  if (!label_column.empty() &&
      std::all_of(label_column.begin(), label_column.end(),
                  [](char c) { return c >= '0' && c <= '9'; })) {
    std::size_t idx = 0;
    auto [ptr, ec] = std::from_chars(label_column.data(),
                                     label_column.data() + label_column.size(), idx);
    if (ec == std::errc{} && ptr == label_column.data() + label_column.size() &&
        idx < header.size()) {
      return idx;
    }
  }
  throw DataError("label column '" + label_column + "' not found in " + path);
}

struct EncodedTable {
  std::vector<double> features;
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::string> names;
  std::vector<std::string> raw_label;  // empty when no label column requested
};

EncodedTable encode_table(const std::string& path, const std::string& label_column,
                          bool want_label) {
  const auto records = read_csv_records(path);
  if (records.empty()) throw DataError("CSV has no header row: " + path);
  const auto& header = records[0];
  const std::size_t n_raw = header.size();
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != n_raw) {
      throw DataError("ragged row " + std::to_string(r) + " in " + path + ": got " +
                      std::to_string(records[r].size()) + " fields, expected " +
                      std::to_string(n_raw));
    }
  }
  const std::size_t n = records.size() - 1;
  if (n == 0) throw DataError("CSV has a header but no data rows: " + path);

  std::size_t label_idx = n_raw;  // sentinel: no label column
  if (want_label) {
    label_idx = resolve_column(header, label_column, path);
  } else if (!label_column.empty()) {
    for (std::size_t j = 0; j < n_raw; ++j) {
      if (header[j] == label_column) label_idx = j;
    }
  }

  // Classify each feature column: numeric when every value parses as a
  // finite real; a parseable non-finite value (nan/inf) is a hard error;
  // otherwise categorical.
  struct Column {
    bool numeric = true;
    std::vector<double> parsed;
    std::map<std::string, std::size_t> categories;  // value -> output offset
    std::vector<std::string> raw;
  };
  std::vector<Column> cols;
  std::vector<std::size_t> feature_idx;
  for (std::size_t j = 0; j < n_raw; ++j) {
    if (j == label_idx) continue;
    feature_idx.push_back(j);
  }
  cols.resize(feature_idx.size());

  for (std::size_t c = 0; c < feature_idx.size(); ++c) {
    const std::size_t j = feature_idx[c];
    Column& col = cols[c];
    col.parsed.reserve(n);
    col.raw.reserve(n);
    bool all_parse = true;
    bool any_nonfinite = false;
    for (std::size_t r = 0; r < n; ++r) {
      const std::string v = trimmed(records[r + 1][j]);
      if (v.empty()) {
        throw DataError("empty value at row " + std::to_string(r + 1) + ", column '" +
                        header[j] + "' in " + path + " (missing values are not imputed)");
      }
      col.raw.push_back(v);
      double x = 0;
      if (parse_real(v, x)) {
        if (!std::isfinite(x)) any_nonfinite = true;
        col.parsed.push_back(x);
      } else {
        all_parse = false;
        col.parsed.push_back(0);
      }
    }
    if (all_parse && any_nonfinite) {
      throw DataError("non-finite numeric value in column '" + header[j] + "' of " + path);
    }
    col.numeric = all_parse;
    if (!col.numeric) {
      for (const auto& v : col.raw) col.categories.emplace(v, 0);
      if (col.categories.size() > kMaxCategoricalValues) {
        throw DataError("column '" + header[j] + "' has " +
                        std::to_string(col.categories.size()) +
                        " distinct non-numeric values; looks like an ID column");
      }
    }
  }

  EncodedTable out;
  out.n_rows = n;
  for (std::size_t c = 0; c < feature_idx.size(); ++c) {
    const std::size_t j = feature_idx[c];
    if (cols[c].numeric) {
      out.names.push_back(header[j]);
    } else {
      std::size_t offset = out.names.size();
      for (auto& [value, slot] : cols[c].categories) {
        slot = offset++;
        out.names.push_back(header[j] + "=" + value);
      }
    }
  }
  out.n_cols = out.names.size();
  if (out.n_cols == 0) throw DataError("no feature columns in " + path);

  out.features.assign(n * out.n_cols, 0.0);
  std::size_t base = 0;
  for (std::size_t c = 0; c < feature_idx.size(); ++c) {
    Column& col = cols[c];
    if (col.numeric) {
      for (std::size_t r = 0; r < n; ++r) out.features[r * out.n_cols + base] = col.parsed[r];
      base += 1;
    } else {
      for (std::size_t r = 0; r < n; ++r) {
        out.features[r * out.n_cols + col.categories[col.raw[r]]] = 1.0;
      }
      base += col.categories.size();
    }
  }

  if (want_label) {
    out.raw_label.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::string v = trimmed(records[r + 1][label_idx]);
      if (v.empty()) {
        throw DataError("empty label at row " + std::to_string(r + 1) + " in " + path);
      }
      out.raw_label.push_back(v);
    }
  }
  return out;
}

std::string csv_escaped(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset::Dataset(std::vector<double> features, std::vector<std::uint8_t> labels,
                 std::vector<std::string> feature_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)) {
  n_rows_ = labels_.size();
  n_cols_ = feature_names_.size();
  if (n_rows_ == 0) throw std::invalid_argument("Dataset: needs at least one row");
  if (n_cols_ == 0) throw std::invalid_argument("Dataset: needs at least one feature");
  if (features_.size() != n_rows_ * n_cols_) {
    throw std::invalid_argument("Dataset: feature matrix size does not match labels");
  }
  for (double v : features_) {
    if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite feature value");
  }
  for (std::uint8_t y : labels_) {
    if (y > 1) throw std::invalid_argument("Dataset: labels must be 0 or 1");
  }
}

std::size_t Dataset::count_label(std::uint8_t value) const {
  return static_cast<std::size_t>(
      std::count(labels_.begin(), labels_.end(), value));
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  std::vector<double> features;
  features.reserve(rows.size() * n_cols_);
  std::vector<std::uint8_t> labels;
  labels.reserve(rows.size());
  for (std::size_t i : rows) {
    const auto r = row(i);
    features.insert(features.end(), r.begin(), r.end());
    labels.push_back(labels_[i]);
  }
  return Dataset(std::move(features), std::move(labels), feature_names_);
}

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::string& positive_label) {
  EncodedTable t = encode_table(path, label_column, /*want_label=*/true);
  std::vector<std::uint8_t> labels(t.n_rows);
  for (std::size_t r = 0; r < t.n_rows; ++r) {
    labels[r] = t.raw_label[r] == positive_label ? 1 : 0;
  }
  return Dataset(std::move(t.features), std::move(labels), std::move(t.names));
}

FeatureTable load_csv_features(const std::string& path, const std::string& drop_column) {
  EncodedTable t = encode_table(path, drop_column, /*want_label=*/false);
  return FeatureTable{std::move(t.features), t.n_rows, t.n_cols, std::move(t.names)};
}

void save_csv(const Dataset& d, const std::string& path, const std::string& label_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write CSV file: " + path);
  for (std::size_t j = 0; j < d.n_cols(); ++j) {
    out << csv_escaped(d.feature_names()[j]) << ',';
  }
  out << csv_escaped(label_column) << '\n';
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    for (std::size_t j = 0; j < d.n_cols(); ++j) {
      out << format_double(d.at(i, j)) << ',';
    }
    out << int(d.label(i)) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

Dataset stratified_subsample(const Dataset& d, double target_minority_frac,
                             std::uint64_t rng_seed) {
  if (!(target_minority_frac > 0.0 && target_minority_frac < 0.5)) {
    throw std::invalid_argument("stratified_subsample: target fraction must be in (0, 0.5)");
  }
  const std::size_t c1 = d.count_label(1);
  const std::size_t c0 = d.n_rows() - c1;
  if (c1 == 0 || c0 == 0) {
    throw DataError("stratified_subsample: dataset has a single class");
  }
  const std::uint8_t minority_label = c1 <= c0 ? 1 : 0;
  const std::size_t n_min = std::min(c0, c1);
  const std::size_t n_maj = std::max(c0, c1);
  const double observed = static_cast<double>(n_min) / static_cast<double>(d.n_rows());
  if (observed <= target_minority_frac) return d;

  const auto n_keep = static_cast<std::size_t>(std::floor(
      target_minority_frac * static_cast<double>(n_maj) / (1.0 - target_minority_frac)));
  if (n_keep == 0) {
    throw DataError("stratified_subsample: target fraction leaves zero minority rows");
  }

  std::vector<std::size_t> minority;
  minority.reserve(n_min);
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    if (d.label(i) == minority_label) minority.push_back(i);
  }
  Rng rng(rng_seed);
  auto pick = rng.sample_without_replacement(minority.size(), n_keep);

  std::vector<std::size_t> keep;
  keep.reserve(n_maj + n_keep);
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    if (d.label(i) != minority_label) keep.push_back(i);
  }
  for (std::size_t p : pick) keep.push_back(minority[p]);
  std::sort(keep.begin(), keep.end());
  return d.select_rows(keep);
}

SplitPair train_test_split(const Dataset& d, double train_frac,
                           std::uint64_t rng_seed, bool stratified) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw std::invalid_argument("train_test_split: train_frac must be in (0, 1)");
  }
  const std::size_t n = d.n_rows();
  const auto total_train = static_cast<std::size_t>(
      std::llround(train_frac * static_cast<double>(n)));
  if (total_train == 0 || total_train == n) {
    throw DataError("train_test_split: split leaves an empty train or test set");
  }

  std::vector<std::size_t> train_idx, test_idx;
  if (stratified) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < n; ++i) by_class[d.label(i)].push_back(i);
    if (by_class[0].empty() || by_class[1].empty()) {
      throw DataError("train_test_split: stratified split needs both classes");
    }
    // Exact rounding for the smaller class; the larger class absorbs the
    // remainder, which keeps both within one sample of the target rate.
    const int small = by_class[1].size() <= by_class[0].size() ? 1 : 0;
    std::size_t take[2];
    take[small] = static_cast<std::size_t>(
        std::llround(train_frac * static_cast<double>(by_class[small].size())));
    take[1 - small] = total_train - std::min(total_train, take[small]);
    for (int c : {0, 1}) {
      if (take[c] == 0 || take[c] > by_class[c].size()) {
        throw DataError("train_test_split: a class would be absent from the train set");
      }
      Rng rng(Rng::derive(rng_seed, static_cast<std::uint64_t>(c)));
      rng.shuffle(by_class[c]);
      train_idx.insert(train_idx.end(), by_class[c].begin(), by_class[c].begin() + take[c]);
      test_idx.insert(test_idx.end(), by_class[c].begin() + take[c], by_class[c].end());
    }
  } else {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(rng_seed);
    rng.shuffle(idx);
    train_idx.assign(idx.begin(), idx.begin() + total_train);
    test_idx.assign(idx.begin() + total_train, idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return SplitPair{d.select_rows(train_idx), d.select_rows(test_idx)};
}

}  // namespace mfl

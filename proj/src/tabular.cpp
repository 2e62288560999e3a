#include "sli/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "sli/error.hpp"
#include "sli/rng.hpp"

namespace sli {

FeatureMatrix::FeatureMatrix(std::vector<std::string> names, std::vector<double> values,
                             std::vector<int> labels)
    : names_(std::move(names)), values_(std::move(values)), labels_(std::move(labels)) {
  if (labels_.size() < 2) throw Error("feature matrix needs at least 2 rows");
  if (names_.empty()) throw Error("feature matrix needs at least 1 column");
  if (values_.size() != labels_.size() * names_.size())
    throw Error("feature matrix values do not match " + std::to_string(labels_.size()) + "x" +
                std::to_string(names_.size()));
  std::unordered_set<std::string> seen;
  for (const auto& name : names_) {
    if (name.empty()) throw Error("empty column name");
    if (!seen.insert(name).second) throw Error("duplicate column \"" + name + "\"");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw Error("non-finite value at row " + std::to_string(i / names_.size() + 1) +
                  ", column \"" + names_[i % names_.size()] + "\"");
  }
  for (const int y : labels_) {
    if (y != kNegativeLabel && y != kPositiveLabel) throw Error("label outside {0,1}");
  }
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
  std::vector<double> out(n_rows());
  for (std::size_t r = 0; r < n_rows(); ++r) out[r] = at(r, c);
  return out;
}

std::vector<double> FeatureMatrix::label_values() const {
  return {labels_.begin(), labels_.end()};
}

std::size_t FeatureMatrix::column_index(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw Error("unknown column \"" + std::string(name) + "\"");
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t FeatureMatrix::count_positive() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), kPositiveLabel));
}

bool FeatureMatrix::has_both_classes() const {
  const auto pos = count_positive();
  return pos > 0 && pos < n_rows();
}

void FeatureMatrix::require_both_classes(std::string_view context) const {
  if (!has_both_classes())
    throw Error(std::string(context) + ": both classes must be present");
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<double> values;
  values.reserve(rows.size() * n_cols());
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (const auto r : rows) {
    if (r >= n_rows()) throw std::out_of_range("select_rows: row index out of range");
    const auto src = row(r);
    values.insert(values.end(), src.begin(), src.end());
    labels.push_back(labels_[r]);
  }
  return {names_, std::move(values), std::move(labels)};
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
  std::vector<std::string> names;
  for (const auto c : cols) {
    if (c >= n_cols()) throw std::out_of_range("select_columns: column index out of range");
    names.push_back(names_[c]);
  }
  std::vector<double> values;
  values.reserve(n_rows() * cols.size());
  for (std::size_t r = 0; r < n_rows(); ++r)
    for (const auto c : cols) values.push_back(at(r, c));
  return {std::move(names), std::move(values), labels_};
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> cols;
  cols.reserve(names.size());
  for (const auto& name : names) cols.push_back(column_index(name));
  return select_columns(std::span<const std::size_t>(cols));
}

namespace {

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace

FeatureMatrix load_csv(const std::filesystem::path& path, std::string_view label_column) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open data file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error("data file " + path.string() + " is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = split_record(line);
  for (auto& h : header) h = std::string(trim(h));

  std::size_t label_idx = header.size();
  std::unordered_set<std::string> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!seen.insert(header[c]).second) throw Error("duplicate column \"" + header[c] + "\"");
    if (header[c] == label_column) label_idx = c;
  }
  if (label_idx == header.size())
    throw Error("label column \"" + std::string(label_column) + "\" not found");

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_idx) names.push_back(header[c]);

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_record(line);
    if (fields.size() != header.size())
      throw Error("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                  " fields, found " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_double(fields[c], v))
        throw Error("non-numeric value \"" + std::string(trim(fields[c])) + "\" at row " +
                    std::to_string(row) + ", column \"" + header[c] + "\"");
      if (c == label_idx) {
        if (v != 0.0 && v != 1.0)
          throw Error("label outside {0,1} at row " + std::to_string(row));
        labels.push_back(static_cast<int>(v));
      } else {
        values.push_back(v);
      }
    }
  }
  return {std::move(names), std::move(values), std::move(labels)};
}

void write_csv(const FeatureMatrix& data, const std::filesystem::path& path,
               std::string_view label_column) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& name : data.names()) out << name << ',';
  out << label_column << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    for (const double v : data.row(r)) out << v << ',';
    out << data.label(r) << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

SplitPair split(const FeatureMatrix& data, double train_fraction, std::uint64_t seed,
                bool stratify) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train fraction must lie in (0,1)");
  const std::size_t n = data.n_rows();
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  if (n_train < 1 || n - n_train < 1)
    throw std::invalid_argument("degenerate split: " + std::to_string(n_train) + " train / " +
                                std::to_string(n - n_train) + " test rows");

  Rng rng(seed);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  if (!stratify) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  } else {
    for (const int cls : {kNegativeLabel, kPositiveLabel}) {
      std::vector<std::size_t> members;
      for (std::size_t r = 0; r < n; ++r)
        if (data.label(r) == cls) members.push_back(r);
      rng.shuffle(members);
      const auto cut = static_cast<std::size_t>(
          std::floor(train_fraction * static_cast<double>(members.size())));
      train_rows.insert(train_rows.end(), members.begin(),
                        members.begin() + static_cast<std::ptrdiff_t>(cut));
      test_rows.insert(test_rows.end(), members.begin() + static_cast<std::ptrdiff_t>(cut),
                       members.end());
    }
    if (train_rows.empty() || test_rows.empty())
      throw std::invalid_argument("degenerate stratified split");
  }
  // Row order inside each side follows the source matrix.
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  auto train = data.select_rows(train_rows);
  auto test = data.select_rows(test_rows);
  return {std::move(train), std::move(test), std::move(train_rows), std::move(test_rows), seed,
          train_fraction};
}

FeatureMatrix synth_dataset(std::size_t n, std::size_t informative, std::size_t noise,
                            std::uint64_t seed, double shift) {
  if (informative < 1) throw std::invalid_argument("synth_dataset: informative must be >= 1");
  if (n < 20) throw std::invalid_argument("synth_dataset: n must be >= 20");

  Rng rng(seed);
  std::vector<int> labels(n);
  // Redraw in the (probability < 2^-19) event that one class is missing.
  do {
    for (auto& y : labels) y = rng.uniform() < 0.5 ? kNegativeLabel : kPositiveLabel;
  } while (std::all_of(labels.begin(), labels.end(), [&](int y) { return y == labels[0]; }));

  const std::size_t v = informative + noise;
  std::vector<std::string> names;
  for (std::size_t j = 1; j <= informative; ++j) names.push_back("inf_" + std::to_string(j));
  for (std::size_t j = 1; j <= noise; ++j) names.push_back("noise_" + std::to_string(j));

  std::vector<double> values(n * v);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < v; ++c) {
      const double mean = c < informative ? shift * labels[r] : 0.0;
      values[r * v + c] = mean + rng.normal();
    }
  }
  return {std::move(names), std::move(values), std::move(labels)};
}

}  // namespace sli

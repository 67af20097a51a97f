#ifndef SVRHMC_DATA_HPP
#define SVRHMC_DATA_HPP

// Dataset ingestion: libsvm sparse text for classification, delimited numeric
// text for regression, column standardisation and seeded train/test splits.
// Storage is dense.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "svrhmc/errors.hpp"
#include "svrhmc/model.hpp"
#include "svrhmc/random.hpp"

namespace svrhmc {

enum class TaskType { classification, regression };

// x_normalized = (x - shift) / scale, per feature column. Zero-variance
// columns get shift 0 and scale 1 and are listed in constant_columns.
struct Normalization {
  Vector shift;
  Vector scale;
  std::vector<std::size_t> constant_columns;
  // Regression responses, when standardised as well.
  std::optional<double> response_shift;
  std::optional<double> response_scale;
};

struct Dataset {
  Matrix features;  // n x d
  Vector labels;    // {-1,+1} for classification, real for regression
  TaskType task = TaskType::classification;
  std::vector<std::string> feature_names;
  std::optional<Normalization> normalization;
  std::vector<std::string> notes;  // ingestion log

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::size_t> to_index(std::string_view s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw numeric_error("cannot format value");
  return std::string(buf, ptr);
}

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::vector<std::string_view> split_on(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// libsvm: "<label> <index>:<value> ...", 1-based strictly increasing indices.

struct LibsvmOptions {
  // Feature count; defaults to the largest index seen.
  std::optional<std::size_t> dimension;
};

inline Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts = {}) {
  struct Entry {
    std::size_t row, col;
    double value;
  };
  std::vector<double> raw_labels;
  std::vector<Entry> entries;
  std::set<double> classes;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = detail::split_whitespace(line);
    if (tokens.empty()) throw parse_error(line_no, 0, "empty line");
    const auto label = detail::to_double(tokens[0]);
    if (!label || !std::isfinite(*label))
      throw parse_error(line_no, 1, "bad label '" + std::string(tokens[0]) + "'");
    const std::size_t row = raw_labels.size();
    raw_labels.push_back(*label);
    if (classes.insert(*label).second && classes.size() > 2)
      throw parse_error(line_no, 1, "more than two distinct labels");
    std::size_t prev = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto tok = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        throw parse_error(line_no, t + 1, "expected index:value, got '" + std::string(tok) + "'");
      const auto idx = detail::to_index(tok.substr(0, colon));
      const auto val = detail::to_double(tok.substr(colon + 1));
      if (!idx || *idx == 0)
        throw parse_error(line_no, t + 1, "bad feature index in '" + std::string(tok) + "'");
      if (!val || !std::isfinite(*val))
        throw parse_error(line_no, t + 1, "bad feature value in '" + std::string(tok) + "'");
      if (*idx <= prev)
        throw parse_error(line_no, t + 1, "feature indices must be strictly increasing");
      if (opts.dimension && *idx > *opts.dimension)
        throw parse_error(line_no, t + 1,
                          "feature index " + std::to_string(*idx) + " exceeds dimension " +
                              std::to_string(*opts.dimension));
      prev = *idx;
      max_index = std::max(max_index, *idx);
      entries.push_back({row, *idx - 1, *val});
    }
  }
  if (raw_labels.empty()) throw parse_error(line_no, 0, "no data rows");
  const std::size_t d = opts.dimension.value_or(max_index);
  if (d == 0) throw parse_error(line_no, 0, "dataset has no features");

  Dataset ds;
  ds.task = TaskType::classification;
  ds.features = Matrix::Zero(static_cast<Eigen::Index>(raw_labels.size()), static_cast<Eigen::Index>(d));
  for (const auto& e : entries)
    ds.features(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;

  auto subset_of = [&](std::initializer_list<double> allowed) {
    return std::all_of(classes.begin(), classes.end(), [&](double c) {
      return std::find(allowed.begin(), allowed.end(), c) != allowed.end();
    });
  };
  double negative;
  if (subset_of({-1.0, 1.0})) {
    negative = -1.0;
  } else if (subset_of({0.0, 1.0})) {
    negative = 0.0;
    ds.notes.push_back("labels {0,1} mapped to {-1,+1}");
  } else if (subset_of({1.0, 2.0})) {
    negative = 1.0;
    ds.notes.push_back("labels {1,2} mapped to {-1,+1}");
  } else {
    // Every line is a row, so row i sits on line i + 1.
    std::size_t first_odd = 0;
    while (raw_labels[first_odd] == -1.0 || raw_labels[first_odd] == 1.0) ++first_odd;
    throw parse_error(first_odd + 1, 1, "labels must be {-1,+1}, {0,1} or {1,2}");
  }
  ds.labels.resize(static_cast<Eigen::Index>(raw_labels.size()));
  for (std::size_t i = 0; i < raw_labels.size(); ++i)
    ds.labels(static_cast<Eigen::Index>(i)) = raw_labels[i] == negative ? -1.0 : 1.0;
  return ds;
}

inline Dataset parse_libsvm_file(const std::string& path, const LibsvmOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open '" + path + "'");
  return parse_libsvm(in, opts);
}

// Zero entries are omitted; values use the shortest round-trip form.
inline void write_libsvm(std::ostream& out, const Dataset& ds) {
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    out << detail::format_double(ds.labels(i));
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
      const double v = ds.features(i, j);
      if (v != 0.0) out << ' ' << (j + 1) << ':' << detail::format_double(v);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Delimited numeric text (UCI style).

struct DelimitedOptions {
  // Column holding the response; negative values count from the end (-1 = last).
  long response_column = -1;
  // Auto-detected from the first data line when unset: comma, then tab, then
  // runs of whitespace. ' ' selects whitespace splitting explicitly.
  std::optional<char> delimiter;
};

inline Dataset parse_delimited(std::istream& in, const DelimitedOptions& opts = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<char> delim = opts.delimiter;
  std::optional<std::size_t> width;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  Dataset ds;
  ds.task = TaskType::regression;

  auto split = [&](std::string_view s) {
    return *delim == ' ' ? detail::split_whitespace(s) : detail::split_on(s, *delim);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) throw parse_error(line_no, 0, "empty line");
    if (!delim) {
      if (line.find(',') != std::string::npos)
        delim = ',';
      else if (line.find('\t') != std::string::npos)
        delim = '\t';
      else
        delim = ' ';
    }
    const auto cells = split(line);
    if (width && cells.size() != *width)
      throw parse_error(line_no, 0,
                        "expected " + std::to_string(*width) + " columns, found " +
                            std::to_string(cells.size()));
    std::vector<double> values;
    values.reserve(cells.size());
    std::optional<std::size_t> bad_column;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = detail::to_double(cells[c]);
      if (!v || !std::isfinite(*v)) {
        if (!bad_column) bad_column = c + 1;
        values.push_back(0);
      } else {
        values.push_back(*v);
      }
    }
    if (bad_column) {
      if (rows.empty() && header.empty()) {
        for (auto c : cells) header.emplace_back(c);
        width = cells.size();
        ds.notes.push_back("skipped header row at line " + std::to_string(line_no));
        continue;
      }
      throw parse_error(line_no, *bad_column,
                        "non-numeric cell '" + std::string(cells[*bad_column - 1]) + "'");
    }
    width = cells.size();
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw parse_error(line_no, 0, "no data rows");
  const long w = static_cast<long>(*width);
  if (w < 2) throw parse_error(1, 0, "need at least one feature column and a response");
  const long rc = opts.response_column < 0 ? w + opts.response_column : opts.response_column;
  if (rc < 0 || rc >= w) throw usage_error("response column out of range");

  ds.features.resize(static_cast<Eigen::Index>(rows.size()), w - 1);
  ds.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Eigen::Index j = 0;
    for (long c = 0; c < w; ++c) {
      if (c == rc)
        ds.labels(static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(c)];
      else
        ds.features(static_cast<Eigen::Index>(i), j++) = rows[i][static_cast<std::size_t>(c)];
    }
  }
  if (!header.empty())
    for (long c = 0; c < w; ++c)
      if (c != rc) ds.feature_names.push_back(header[static_cast<std::size_t>(c)]);
  return ds;
}

inline Dataset parse_delimited_file(const std::string& path, const DelimitedOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open '" + path + "'");
  return parse_delimited(in, opts);
}

// Features then response as the last column; header row when names are known.
inline void write_delimited(std::ostream& out, const Dataset& ds, char delim = ',') {
  if (!ds.feature_names.empty()) {
    for (const auto& name : ds.feature_names) out << name << delim;
    out << "response\n";
  }
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j)
      out << detail::format_double(ds.features(i, j)) << delim;
    out << detail::format_double(ds.labels(i)) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Standardisation.

struct NormalizeOptions {
  bool responses = false;  // also standardise regression responses
};

inline Normalization fit_normalization(const Dataset& ds, const NormalizeOptions& opts = {}) {
  if (ds.features.rows() < 2) throw usage_error("normalize: need at least 2 rows");
  Normalization norm;
  const auto d = ds.features.cols();
  const double n = static_cast<double>(ds.features.rows());
  norm.shift.resize(d);
  norm.scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mean = ds.features.col(j).mean();
    // Population standard deviation, so {0, 2} maps to {-1, 1}.
    const double sd = std::sqrt((ds.features.col(j).array() - mean).square().sum() / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      norm.shift(j) = 0;
      norm.scale(j) = 1;
      norm.constant_columns.push_back(static_cast<std::size_t>(j));
    } else {
      norm.shift(j) = mean;
      norm.scale(j) = sd;
    }
  }
  if (opts.responses) {
    const double mean = ds.labels.mean();
    const double sd = std::sqrt((ds.labels.array() - mean).square().sum() / n);
    norm.response_shift = mean;
    norm.response_scale = sd > 0 ? sd : 1.0;
  }
  return norm;
}

inline Dataset apply_normalization(const Dataset& ds, const Normalization& norm) {
  if (norm.shift.size() != ds.features.cols())
    throw usage_error("apply_normalization: column count mismatch");
  Dataset out = ds;
  out.features = (ds.features.rowwise() - norm.shift.transpose()).array().rowwise() /
                 norm.scale.transpose().array();
  if (norm.response_shift)
    out.labels = (ds.labels.array() - *norm.response_shift) / *norm.response_scale;
  out.normalization = norm;
  return out;
}

inline Dataset normalize(const Dataset& ds, const NormalizeOptions& opts = {}) {
  const Normalization norm = fit_normalization(ds, opts);
  Dataset out = apply_normalization(ds, norm);
  for (auto c : norm.constant_columns)
    out.notes.push_back("column " + std::to_string(c + 1) + " has zero variance; left unscaled");
  return out;
}

// Appends a constant-1 column (intercept term).
inline Dataset with_intercept(const Dataset& ds) {
  Dataset out = ds;
  out.features.conservativeResize(Eigen::NoChange, ds.features.cols() + 1);
  out.features.col(ds.features.cols()).setOnes();
  if (!out.feature_names.empty()) out.feature_names.push_back("intercept");
  return out;
}

// ---------------------------------------------------------------------------
// Train/test split.

struct SplitOptions {
  // Standardise with statistics from the training rows only, then apply the
  // same transform to the test rows.
  bool normalize_features = true;
  bool normalize_responses = false;
};

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;  // indices into the input dataset
  std::vector<std::size_t> test_rows;
};

inline Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.task = ds.task;
  out.feature_names = ds.feature_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels(static_cast<Eigen::Index>(i)) = ds.labels(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

// Seeded uniform shuffle, then the first round(fraction * n) rows train.
inline SplitResult split(const Dataset& ds, double fraction, std::uint64_t seed,
                         const SplitOptions& opts = {}) {
  if (!(fraction > 0 && fraction < 1)) throw usage_error("split: fraction must be in (0, 1)");
  const std::size_t n = ds.rows();
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train >= n)
    throw usage_error("split: fraction leaves an empty partition (n = " + std::to_string(n) + ")");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine rng(seed);
  // Fisher-Yates.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i)(rng);
    std::swap(order[i], order[j]);
  }
  SplitResult r;
  r.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  r.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  r.train = select_rows(ds, r.train_rows);
  r.test = select_rows(ds, r.test_rows);
  if (opts.normalize_features || opts.normalize_responses) {
    Normalization norm = fit_normalization(r.train, {opts.normalize_responses});
    if (!opts.normalize_features) {
      norm.shift.setZero();
      norm.scale.setOnes();
      norm.constant_columns.clear();
    }
    r.train = apply_normalization(r.train, norm);
    r.test = apply_normalization(r.test, norm);
  }
  return r;
}

}  // namespace svrhmc

#endif  // SVRHMC_DATA_HPP

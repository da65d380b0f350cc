#include "rmesn/dataset.hpp"

#include "rmesn/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>

namespace rmesn {

Mts::Mts(Matrix v) : values(std::move(v)), length(static_cast<std::size_t>(values.rows())) {}

std::size_t Dataset::t_max() const noexcept {
  std::size_t t = 0;
  for (const auto& s : samples) t = std::max(t, s.rows());
  return t;
}

void Dataset::validate() const {
  if (labels.size() != samples.size()) throw InvalidInput("dataset needs exactly one label per sample");
  if (feature_dim < 1) throw InvalidInput("dataset must have at least one variable");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Mts& s = samples[i];
    const std::string which = "sample " + std::to_string(i);
    if (s.features() != feature_dim) throw InvalidInput(which + " has a different number of variables");
    if (s.length < 1 || s.length > s.rows()) throw InvalidInput(which + " has an invalid length");
    if (!s.values.allFinite()) throw InvalidInput(which + " has non-finite values");
    if (!s.missing.empty() && s.missing.size() != s.rows() * s.features()) {
      throw InvalidInput(which + " has a malformed missing-value mask");
    }
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw InvalidLabel(which + " has label " + std::to_string(labels[i]) + " outside [0, " +
                         std::to_string(num_classes) + ")");
    }
  }
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::vector<std::string_view> tokenize(std::string_view line) {
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

template <typename T>
bool parse_number(std::string_view token, T& value) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc() && ptr == end;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-comment, non-blank line; false at end of input.
  bool next(std::vector<std::string_view>& tokens) {
    while (std::getline(in_, line_)) {
      ++number_;
      std::string_view view(line_);
      const auto first = view.find_first_not_of(" \t\r");
      if (first == std::string_view::npos) continue;
      if (view[first] == '#') {
        comment(view.substr(first + 1));
        continue;
      }
      tokens = tokenize(view);
      return true;
    }
    return false;
  }

  std::size_t line() const noexcept { return number_; }
  std::vector<std::pair<int, std::string>> class_names;

 private:
  void comment(std::string_view text) {
    auto tokens = tokenize(text);
    int index = 0;
    if (tokens.size() >= 3 && tokens[0] == "class" && parse_number(tokens[1], index)) {
      const auto name_start = static_cast<std::size_t>(tokens[2].data() - text.data());
      std::string name(text.substr(name_start));
      while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
      class_names.emplace_back(index, std::move(name));
    }
  }

  std::istream& in_;
  std::string line_;
  std::size_t number_ = 0;
};

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  LineReader reader(in);
  std::vector<std::string_view> tok;
  if (!reader.next(tok)) throw ParseError(reader.line(), "missing header line 'N F C T_max'");
  std::size_t n = 0, f = 0, c = 0, t_max = 0;
  if (tok.size() != 4 || !parse_number(tok[0], n) || !parse_number(tok[1], f) ||
      !parse_number(tok[2], c) || !parse_number(tok[3], t_max)) {
    throw ParseError(reader.line(), "malformed header, expected 'N F C T_max'");
  }
  const std::size_t header_line = reader.line();
  if (f < 1) throw ParseError(reader.line(), "header declares zero variables");
  if (c < 1) throw ParseError(reader.line(), "header declares zero classes");

  Dataset ds;
  ds.feature_dim = f;
  ds.num_classes = c;
  ds.samples.reserve(n);
  ds.labels.reserve(n);
  std::size_t longest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!reader.next(tok)) {
      throw ParseError(reader.line(), "expected " + std::to_string(n) + " samples, found " + std::to_string(i));
    }
    int label = 0;
    std::size_t rows = 0;
    std::size_t length = 0;
    if ((tok.size() != 2 && tok.size() != 3) || !parse_number(tok[0], label) || !parse_number(tok[1], rows)) {
      throw ParseError(reader.line(), "malformed sample line, expected 'label T'");
    }
    length = rows;
    if (tok.size() == 3 && !parse_number(tok[2], length)) {
      throw ParseError(reader.line(), "malformed true length on sample line");
    }
    if (rows < 1 || length < 1 || length > rows) {
      throw ParseError(reader.line(), "sample length must satisfy 1 <= length <= T");
    }
    if (label < 0 || static_cast<std::size_t>(label) >= c) {
      throw ParseError(reader.line(), "label " + std::to_string(label) + " outside [0, " + std::to_string(c) + ")");
    }
    Mts mts;
    mts.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(f));
    mts.length = length;
    for (std::size_t t = 0; t < rows; ++t) {
      if (!reader.next(tok)) throw ParseError(reader.line(), "unexpected end of file inside a sample");
      if (tok.size() != f) {
        throw ParseError(reader.line(), "expected " + std::to_string(f) + " values, found " + std::to_string(tok.size()));
      }
      for (std::size_t k = 0; k < f; ++k) {
        double v = 0.0;
        if (tok[k] == "NA") {
          if (mts.missing.empty()) mts.missing.assign(rows * f, 0);
          mts.missing[t * f + k] = 1;
        } else if (!parse_number(tok[k], v) || !std::isfinite(v)) {
          throw ParseError(reader.line(), "invalid value '" + std::string(tok[k]) + "'");
        }
        mts.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = v;
      }
    }
    longest = std::max(longest, rows);
    ds.samples.push_back(std::move(mts));
    ds.labels.push_back(label);
  }
  if (reader.next(tok)) throw ParseError(reader.line(), "trailing data after " + std::to_string(n) + " samples");
  if (longest != t_max) {
    throw ParseError(header_line, "header T_max is " + std::to_string(t_max) + " but the longest sample has " +
                            std::to_string(longest) + " steps");
  }
  if (!reader.class_names.empty()) {
    ds.class_names.assign(c, std::string());
    for (auto& [idx, name] : reader.class_names) {
      if (idx >= 0 && static_cast<std::size_t>(idx) < c) ds.class_names[static_cast<std::size_t>(idx)] = name;
    }
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open dataset file '" + path.string() + "'");
  return read_dataset(in);
}

void write_dataset(const Dataset& ds, std::ostream& out) {
  ds.validate();
  for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
    if (!ds.class_names[c].empty()) out << "# class " << c << ' ' << ds.class_names[c] << '\n';
  }
  out << ds.size() << ' ' << ds.feature_dim << ' ' << ds.num_classes << ' ' << ds.t_max() << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Mts& s = ds.samples[i];
    out << ds.labels[i] << ' ' << s.rows();
    if (s.length != s.rows()) out << ' ' << s.length;
    out << '\n';
    for (std::size_t t = 0; t < s.rows(); ++t) {
      for (std::size_t k = 0; k < s.features(); ++k) {
        if (k > 0) out << ' ';
        if (s.is_missing(t, k)) {
          out << "NA";
        } else {
          out << format_double(s.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)));
        }
      }
      out << '\n';
    }
  }
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write dataset file '" + path.string() + "'");
  write_dataset(ds, out);
  if (!out) throw InvalidInput("failed writing dataset file '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Normalization

ZScoreStats zscore_fit(const Dataset& train) {
  if (train.size() == 0) throw InvalidInput("cannot fit normalization on an empty dataset");
  const auto f = static_cast<Eigen::Index>(train.feature_dim);
  Vector sum = Vector::Zero(f);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(f);
  for (const auto& s : train.samples) {
    for (std::size_t t = 0; t < s.length; ++t) {
      for (Eigen::Index k = 0; k < f; ++k) {
        if (s.is_missing(t, static_cast<std::size_t>(k))) continue;
        sum(k) += s.values(static_cast<Eigen::Index>(t), k);
        ++count(k);
      }
    }
  }
  ZScoreStats stats;
  stats.mean = Vector::Zero(f);
  for (Eigen::Index k = 0; k < f; ++k) {
    if (count(k) > 0) stats.mean(k) = sum(k) / count(k);
  }
  Vector sq = Vector::Zero(f);
  for (const auto& s : train.samples) {
    for (std::size_t t = 0; t < s.length; ++t) {
      for (Eigen::Index k = 0; k < f; ++k) {
        if (s.is_missing(t, static_cast<std::size_t>(k))) continue;
        const double d = s.values(static_cast<Eigen::Index>(t), k) - stats.mean(k);
        sq(k) += d * d;
      }
    }
  }
  stats.std = Vector::Ones(f);
  for (Eigen::Index k = 0; k < f; ++k) {
    if (count(k) > 0 && sq(k) > 0.0) stats.std(k) = std::sqrt(sq(k) / count(k));
  }
  return stats;
}

namespace {

template <typename Op>
Dataset transform_observed(const Dataset& ds, const ZScoreStats& stats, Op op) {
  const auto f = static_cast<Eigen::Index>(ds.feature_dim);
  if (stats.mean.size() != f || stats.std.size() != f) {
    throw InvalidArgument("normalization statistics cover " + std::to_string(stats.mean.size()) +
                          " variables, dataset has " + std::to_string(f));
  }
  Dataset out = ds;
  for (auto& s : out.samples) {
    for (std::size_t t = 0; t < s.length; ++t) {
      for (Eigen::Index k = 0; k < f; ++k) {
        if (s.is_missing(t, static_cast<std::size_t>(k))) continue;
        double& v = s.values(static_cast<Eigen::Index>(t), k);
        v = op(v, stats.mean(k), stats.std(k));
      }
    }
  }
  return out;
}

}  // namespace

Dataset zscore_apply(const Dataset& ds, const ZScoreStats& stats) {
  return transform_observed(ds, stats, [](double v, double mean, double sd) { return (v - mean) / sd; });
}

Dataset zscore_invert(const Dataset& ds, const ZScoreStats& stats) {
  return transform_observed(ds, stats, [](double v, double mean, double sd) { return v * sd + mean; });
}

Dataset zero_pad(const Dataset& ds) {
  const std::size_t t_max = ds.t_max();
  Dataset out = ds;
  for (auto& s : out.samples) {
    const auto old_rows = static_cast<Eigen::Index>(s.rows());
    if (s.rows() == t_max) continue;
    Matrix padded = Matrix::Zero(static_cast<Eigen::Index>(t_max), s.values.cols());
    padded.topRows(old_rows) = s.values;
    if (!s.missing.empty()) s.missing.resize(t_max * s.features(), 0);
    s.values = std::move(padded);
  }
  return out;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.feature_dim = ds.feature_dim;
  out.num_classes = ds.num_classes;
  out.class_names = ds.class_names;
  out.samples.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    if (i >= ds.size()) throw InvalidArgument("subset index out of range");
    out.samples.push_back(ds.samples[i]);
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Partitions

namespace {

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double fraction,
                                                                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("split fraction must lie in (0, 1)");
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - fraction) + 1e-9));
  const auto perm = permutation(n, seed);
  std::vector<std::size_t> train(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> test(perm.end() - static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed) {
  auto [train, test] = split_indices(ds.size(), fraction, seed);
  return {subset(ds, train), subset(ds, test)};
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 1 || k > n) {
    throw InvalidArgument("cannot build " + std::to_string(k) + " folds from " + std::to_string(n) + " samples");
  }
  const auto perm = permutation(n, seed);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(perm[i]);
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 1 || spec.per_class < 1 || spec.length < 1 || spec.features < 1) {
    throw InvalidArgument("synthetic dataset counts must all be positive");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) {
    throw InvalidArgument("synthetic noise must be finite and non-negative");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset ds;
  ds.feature_dim = spec.features;
  ds.num_classes = spec.classes;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    const double freq = 0.05 * static_cast<double>(c + 1);
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      Matrix v(static_cast<Eigen::Index>(spec.length), static_cast<Eigen::Index>(spec.features));
      for (Eigen::Index k = 0; k < v.cols(); ++k) {
        const double phi = phase(rng);
        for (Eigen::Index t = 0; t < v.rows(); ++t) {
          v(t, k) = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t) + phi);
        }
      }
      if (spec.noise > 0.0) {
        for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] += spec.noise * normal(rng);
      }
      ds.samples.emplace_back(std::move(v));
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

}  // namespace rmesn

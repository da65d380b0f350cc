#include "rmesn/dataset.hpp"
#include "rmesn/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <string_view>

namespace rmesn {

namespace {

std::vector<std::string_view> split_any(std::string_view line, std::string_view delims) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && delims.find(line[i]) != std::string_view::npos) ++i;
    const std::size_t start = i;
    while (i < line.size() && delims.find(line[i]) == std::string_view::npos) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_missing_token(std::string_view t) { return t == "?" || t == "NA" || t == "NaN" || t == "nan"; }

bool parse_double(std::string_view t, double& v) {
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, v);
  return ec == std::errc() && ptr == end && std::isfinite(v);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

/// Builds an Mts from per-variable columns, dropping trailing steps where
/// every variable is missing (variable-length exports pad that way).
Mts build_series(const std::vector<std::vector<double>>& columns,
                 const std::vector<std::vector<std::uint8_t>>& missing, std::size_t line) {
  std::size_t steps = columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != steps) throw ParseError(line, "variables of one sample have different lengths");
  }
  while (steps > 0) {
    bool all_missing = true;
    for (const auto& m : missing) all_missing = all_missing && m[steps - 1] != 0;
    if (!all_missing) break;
    --steps;
  }
  if (steps == 0) throw ParseError(line, "sample has no observed values");
  const std::size_t f = columns.size();
  Mts mts;
  mts.values = Matrix::Zero(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(f));
  mts.length = steps;
  bool any_missing = false;
  for (std::size_t k = 0; k < f; ++k) {
    for (std::size_t t = 0; t < steps; ++t) any_missing = any_missing || missing[k][t] != 0;
  }
  if (any_missing) mts.missing.assign(steps * f, 0);
  for (std::size_t k = 0; k < f; ++k) {
    for (std::size_t t = 0; t < steps; ++t) {
      if (missing[k][t] != 0) {
        mts.missing[t * f + k] = 1;
      } else {
        mts.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = columns[k][t];
      }
    }
  }
  return mts;
}

Dataset assemble(std::vector<Mts> samples, const std::vector<std::string>& raw_labels,
                 const std::vector<std::string>& vocabulary) {
  Dataset ds;
  if (samples.empty()) throw InvalidInput("no samples found in the input file");
  ds.feature_dim = samples.front().features();
  if (vocabulary.empty()) {
    auto [labels, names] = index_labels(raw_labels);
    ds.labels = std::move(labels);
    ds.class_names = std::move(names);
  } else {
    ds.labels = index_labels_with(raw_labels, vocabulary);
    ds.class_names = vocabulary;
  }
  ds.num_classes = ds.class_names.size();
  ds.samples = std::move(samples);
  ds.validate();
  return ds;
}

}  // namespace

std::pair<std::vector<int>, std::vector<std::string>> index_labels(const std::vector<std::string>& raw) {
  bool numeric = true;
  for (const auto& r : raw) {
    double v = 0.0;
    numeric = numeric && parse_double(r, v);
  }
  std::vector<std::string> names;
  if (numeric) {
    std::map<double, std::string> by_value;
    for (const auto& r : raw) {
      double v = 0.0;
      parse_double(r, v);
      by_value.emplace(v, r);
    }
    for (auto& [v, name] : by_value) names.push_back(name);
  } else {
    names = raw;
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
  }
  return {index_labels_with(raw, names), names};
}

std::vector<int> index_labels_with(const std::vector<std::string>& raw, const std::vector<std::string>& vocabulary) {
  std::vector<int> labels;
  labels.reserve(raw.size());
  for (const auto& r : raw) {
    auto it = std::find(vocabulary.begin(), vocabulary.end(), r);
    if (it == vocabulary.end()) {
      // Numeric labels may be spelled differently ("1" vs "1.0").
      double v = 0.0;
      if (parse_double(r, v)) {
        it = std::find_if(vocabulary.begin(), vocabulary.end(), [&](const std::string& name) {
          double w = 0.0;
          return parse_double(name, w) && w == v;
        });
      }
    }
    if (it == vocabulary.end()) throw InvalidLabel("label '" + r + "' is not among the declared classes");
    labels.push_back(static_cast<int>(it - vocabulary.begin()));
  }
  return labels;
}

Dataset import_ts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t number = 0;
  bool in_data = false;
  std::vector<std::string> vocabulary;
  std::vector<Mts> samples;
  std::vector<std::string> raw_labels;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (!in_data) {
      if (view.front() != '@') throw ParseError(number, "unexpected content before @data");
      const auto tokens = split_any(view, " \t");
      const std::string key = lower(tokens.front());
      if (key == "@data") {
        in_data = true;
      } else if (key == "@timestamps" && tokens.size() > 1 && lower(tokens[1]) == "true") {
        throw ParseError(number, "time-stamped .ts files are not supported");
      } else if (key == "@classlabel") {
        if (tokens.size() < 2 || lower(tokens[1]) != "true") throw ParseError(number, "file has no class labels");
        for (std::size_t i = 2; i < tokens.size(); ++i) vocabulary.emplace_back(tokens[i]);
      }
      continue;
    }
    auto fields = split_any(view, ":");
    if (fields.size() < 2) throw ParseError(number, "expected 'dim1:dim2:...:label'");
    raw_labels.emplace_back(trim(fields.back()));
    fields.pop_back();
    std::vector<std::vector<double>> columns(fields.size());
    std::vector<std::vector<std::uint8_t>> missing(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k) {
      for (auto token : split_any(fields[k], ",")) {
        token = trim(token);
        double v = 0.0;
        if (is_missing_token(token)) {
          columns[k].push_back(0.0);
          missing[k].push_back(1);
        } else if (parse_double(token, v)) {
          columns[k].push_back(v);
          missing[k].push_back(0);
        } else {
          throw ParseError(number, "invalid value '" + std::string(token) + "'");
        }
      }
    }
    if (!samples.empty() && fields.size() != samples.front().features()) {
      throw ParseError(number, "sample has a different number of variables");
    }
    samples.push_back(build_series(columns, missing, number));
  }
  if (!in_data) throw ParseError(number, "missing @data section");
  return assemble(std::move(samples), raw_labels, vocabulary);
}

Dataset import_delimited(const std::filesystem::path& path, const DelimitedOptions& options) {
  if (options.dims < 1) throw InvalidArgument("delimited import needs at least one variable");
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t number = 0;
  std::vector<Mts> samples;
  std::vector<std::string> raw_labels;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto tokens = split_any(view, ", \t;");
    if (tokens.size() < 2) throw ParseError(number, "expected a label and at least one value");
    std::string_view label;
    if (options.label_column == DelimitedOptions::LabelColumn::First) {
      label = tokens.front();
      tokens.erase(tokens.begin());
    } else {
      label = tokens.back();
      tokens.pop_back();
    }
    if (tokens.size() % options.dims != 0) {
      throw ParseError(number, std::to_string(tokens.size()) + " values do not split into " +
                                   std::to_string(options.dims) + " variables");
    }
    const std::size_t steps = tokens.size() / options.dims;
    std::vector<std::vector<double>> columns(options.dims, std::vector<double>(steps));
    std::vector<std::vector<std::uint8_t>> missing(options.dims, std::vector<std::uint8_t>(steps, 0));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const bool time_major = options.layout == DelimitedOptions::Layout::TimeMajor;
      const std::size_t t = time_major ? i / options.dims : i % steps;
      const std::size_t k = time_major ? i % options.dims : i / steps;
      double v = 0.0;
      if (is_missing_token(tokens[i])) {
        missing[k][t] = 1;
      } else if (parse_double(tokens[i], v)) {
        columns[k][t] = v;
      } else {
        throw ParseError(number, "invalid value '" + std::string(tokens[i]) + "'");
      }
    }
    raw_labels.emplace_back(label);
    samples.push_back(build_series(columns, missing, number));
  }
  return assemble(std::move(samples), raw_labels, {});
}

}  // namespace rmesn

#pragma once

#include "rmesn/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace rmesn {

/// One multivariate time series. `values` holds one row per time step; rows
/// past `length` are padding.
struct Mts {
  Matrix values;                       // rows x F
  std::size_t length = 0;              // true number of steps (<= rows)
  std::vector<std::uint8_t> missing;   // empty, or rows*F row-major flags for "NA" cells

  Mts() = default;
  explicit Mts(Matrix v);

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t features() const noexcept { return static_cast<std::size_t>(values.cols()); }
  bool is_missing(std::size_t t, std::size_t f) const {
    return !missing.empty() && missing[t * features() + f] != 0;
  }
  bool operator==(const Mts&) const = default;
};

struct Dataset {
  std::vector<Mts> samples;
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
  std::vector<std::string> class_names;  // optional, from "# class <i> <name>" comments

  std::size_t size() const noexcept { return samples.size(); }
  /// Longest stored sequence (rows, padding included).
  std::size_t t_max() const noexcept;
  /// Throws InvalidInput when an invariant is violated.
  void validate() const;
  bool operator==(const Dataset&) const = default;
};

Dataset load_dataset(const std::filesystem::path& path);
Dataset read_dataset(std::istream& in);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
void write_dataset(const Dataset& ds, std::ostream& out);

struct ZScoreStats {
  Vector mean;
  Vector std;  // population std; zero-variance variables store 1

  bool operator==(const ZScoreStats& o) const { return mean == o.mean && std == o.std; }
};

/// Per-variable statistics over every observed (non-missing, non-padding)
/// cell of the training set.
ZScoreStats zscore_fit(const Dataset& train);
Dataset zscore_apply(const Dataset& ds, const ZScoreStats& stats);
Dataset zscore_invert(const Dataset& ds, const ZScoreStats& stats);

/// Appends zero rows so every sample has t_max rows. True lengths are kept.
Dataset zero_pad(const Dataset& ds);

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

/// Shuffled train/test partition. The test part has floor(N * (1 - fraction))
/// samples.
std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed);
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double fraction, std::uint64_t seed);

/// k disjoint folds covering 0..n-1, sizes differing by at most one.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t classes = 2;
  std::size_t per_class = 50;
  std::size_t length = 100;
  std::size_t features = 3;
  double noise = 0.1;
  std::uint64_t seed = 0;

  bool operator==(const SyntheticSpec&) const = default;
};

/// Class c is a bank of sinusoids at 0.05 * (c + 1) cycles per step with a
/// random phase per variable, plus Gaussian noise.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Importers for external formats (convert.cpp).

/// sktime/UEA ".ts" files (equal or unequal length, no timestamps).
Dataset import_ts(const std::filesystem::path& path);

struct DelimitedOptions {
  std::size_t dims = 1;
  enum class Layout { TimeMajor, DimMajor } layout = Layout::DimMajor;
  enum class LabelColumn { First, Last } label_column = LabelColumn::First;
};

/// One sample per line (UCR/UCI exports). Values are split on commas, tabs or
/// spaces. TimeMajor reads x1(1) x2(1) ... ; DimMajor reads x1(1..T) x2(1..T) ...
Dataset import_delimited(const std::filesystem::path& path, const DelimitedOptions& options);

/// Re-maps raw label strings to 0-based indices, sorted numerically when every
/// label is numeric and lexicographically otherwise.
std::pair<std::vector<int>, std::vector<std::string>> index_labels(
    const std::vector<std::string>& raw);

/// Same as index_labels but with a fixed ordered vocabulary.
std::vector<int> index_labels_with(const std::vector<std::string>& raw,
                                   const std::vector<std::string>& vocabulary);

}  // namespace rmesn

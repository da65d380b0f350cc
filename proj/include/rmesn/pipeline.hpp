#pragma once

#include "rmesn/dataset.hpp"
#include "rmesn/dimred.hpp"
#include "rmesn/readout.hpp"
#include "rmesn/representation.hpp"
#include "rmesn/reservoir.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rmesn {

enum class ReadoutKind { Ridge, Mlp };

std::string_view to_string(ReadoutKind kind);
ReadoutKind parse_readout_kind(std::string_view text);

struct DimredConfig {
  bool enabled = true;
  std::size_t components = 75;  // D; a bidirectional reservoir keeps 2D
  CovarianceMode mode = CovarianceMode::PerSample;
  bool centered = false;

  bool operator==(const DimredConfig&) const = default;
};

struct PipelineConfig {
  ReservoirConfig reservoir;
  DimredConfig dimred;
  RepresentationKind representation = RepresentationKind::ReservoirModel;
  ReadoutKind readout = ReadoutKind::Ridge;
  double readout_lambda = 1.0;  // ridge readout only; the MLP uses mlp.l2
  MlpConfig mlp;
  double model_lambda = 5.0;    // per-sample model fits
  bool normalize = true;

  std::uint64_t seed = 0;
  std::size_t trials = 10;
  std::vector<std::uint64_t> seeds;  // explicit trial seeds; empty = seed, seed+1, ...

  std::string train_path;
  std::string test_path;
  std::optional<SyntheticSpec> synthetic;
  double split_fraction = 0.7;  // used with synthetic data

  std::size_t folds = 5;
  std::vector<std::size_t> sweep_components{10, 25, 50, 75, 100, 150};

  /// Throws InvalidArgument on inconsistent settings.
  void validate() const;
  /// Whether the projection stage runs for this representation.
  bool uses_projection() const noexcept;
  /// Seeds used by repeat_trials.
  std::vector<std::uint64_t> trial_seeds(std::size_t n_runs) const;

  bool operator==(const PipelineConfig&) const = default;
};

/// `key = value` lines, '#' starts a comment. Unknown keys and malformed
/// values raise ParseError with the line number.
PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::string& path);
/// Applies one assignment to `config` (used by the parser and CLI overrides).
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);
/// Every key, one per line, in a form parse_config reads back exactly.
void write_config(const PipelineConfig& config, std::ostream& out);
std::string config_to_string(const PipelineConfig& config);

/// Everything fitted on the training set.
struct FittedModel {
  PipelineConfig config;
  std::size_t feature_dim = 0;
  std::size_t classes = 0;
  std::vector<std::string> class_names;
  std::optional<ZScoreStats> normalization;
  std::optional<Reservoir> reservoir;
  std::optional<Projection> projection;
  RidgeModel ridge;
  MlpReadout mlp;
};

/// Noise streams for encoding. Training and scoring draw from disjoint ranges.
inline constexpr std::uint64_t kTrainStreams = 0;
inline constexpr std::uint64_t kTestStreams = std::uint64_t{1} << 32;

/// Fits every stage on `train` only. The seed in config.reservoir.seed drives
/// the reservoir; config.mlp.seed drives the deep readout.
FittedModel fit_model(const PipelineConfig& config, const Dataset& train);

/// Normalization, encoding, projection and representation of `ds` under a
/// fitted model.
Representation transform(const FittedModel& model, const Dataset& ds,
                         std::uint64_t stream_base = kTestStreams);
std::vector<int> predict(const FittedModel& model, const Dataset& ds);

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
  double seconds = 0.0;  // train + test wall time
  std::uint64_t seed = 0;
};

/// Macro F1 averages over the classes present in `truth` or `predicted`.
Metrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted,
                        std::size_t classes);

struct PipelineResult {
  Metrics metrics;
  std::vector<int> predictions;
  std::vector<std::uint8_t> model_bytes;
};

PipelineResult run_pipeline(const PipelineConfig& config, const Dataset& train, const Dataset& test);

/// Copy of `config` with the reservoir and MLP seeds derived from `seed`.
PipelineConfig with_seed(PipelineConfig config, std::uint64_t seed);

struct TrialSummary {
  std::vector<Metrics> runs;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
};

/// Runs n_runs independent seeds one after another (so per-run timings do not
/// compete for cores) and aggregates in seed order.
TrialSummary repeat_trials(const PipelineConfig& config, const Dataset& train, const Dataset& test,
                           std::size_t n_runs);

struct SweepRow {
  std::size_t components = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double seconds = 0.0;         // mean per fold, D-dependent stages only
  double encode_seconds = 0.0;  // mean per fold, shared reservoir encoding
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::vector<std::size_t>> folds;
};

/// k-fold cross-validation over the number of components. Each fold is
/// encoded once and the projection, representation and readout are refit per
/// D, so every D sees identical folds and reservoir states.
SweepResult crossval_d_sweep(const PipelineConfig& config, const Dataset& ds,
                             const std::vector<std::size_t>& d_values, std::size_t k);

}  // namespace rmesn

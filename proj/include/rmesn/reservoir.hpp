#pragma once

#include "rmesn/dataset.hpp"
#include "rmesn/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rmesn {

struct ReservoirConfig {
  std::size_t units = 800;        // R
  double spectral_radius = 0.99;  // rho
  double connectivity = 0.25;     // beta, fraction of non-zero recurrent weights
  double input_scaling = 0.15;    // omega
  double noise_level = 0.01;      // xi, std of the noise inside tanh
  std::uint64_t seed = 0;
  bool bidirectional = false;

  void validate() const;
  bool operator==(const ReservoirConfig&) const = default;
};

/// Fixed random recurrent layer. Immutable after construction.
class Reservoir {
 public:
  /// Takes ownership of explicit weights (deserialization, hand-built toys).
  Reservoir(ReservoirConfig config, Matrix w_in, SparseMatrix w_r);

  const ReservoirConfig& config() const noexcept { return config_; }
  std::size_t units() const noexcept { return config_.units; }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(w_in_.cols()); }
  /// State features per step: R, or 2R when bidirectional.
  std::size_t state_dim() const noexcept { return config_.bidirectional ? 2 * units() : units(); }
  const Matrix& w_in() const noexcept { return w_in_; }
  const SparseMatrix& w_r() const noexcept { return w_r_; }

  bool operator==(const Reservoir&) const = default;

 private:
  ReservoirConfig config_;
  Matrix w_in_;       // R x F
  SparseMatrix w_r_;  // R x R
};

/// W_in ~ U[-omega, omega]; W_r entries present with probability beta, values
/// U[-1, 1], rescaled to the configured spectral radius. Fully determined by
/// the seed.
Reservoir build_reservoir(const ReservoirConfig& config, std::size_t input_dim);

/// Noise for sample `stream` is drawn from its own generator seeded by
/// (config.seed, stream, direction), so results never depend on scheduling.
/// Forward states h(t) = tanh(W_in x(t) + W_r h(t-1) + eps(t)), h(0) = 0.
/// Returns T x R.
Matrix run_states(const Reservoir& res, const MatrixRef& inputs, std::uint64_t stream = 0);

/// Row t is [forward h(t); backward h(t)] where the backward pass runs the same
/// reservoir over the time-reversed inputs. Returns T x 2R.
Matrix run_states_bidirectional(const Reservoir& res, const MatrixRef& inputs,
                                std::uint64_t stream = 0);

/// N x T_max x features activations, stored as the mode-3 matricization
/// (row n * T_max + t holds the state of sample n at step t).
struct StateTensor {
  std::size_t samples = 0;
  std::size_t steps = 0;
  std::size_t features = 0;
  RowMatrix data;
  std::vector<std::size_t> lengths;  // true length of each sample
  bool bidirectional = false;

  auto slice(std::size_t n) const {
    return data.middleRows(static_cast<Eigen::Index>(n * steps), static_cast<Eigen::Index>(steps));
  }
  auto state(std::size_t n, std::size_t t) const {
    return data.row(static_cast<Eigen::Index>(n * steps + t));
  }
};

/// Pads each sample at the end to T_max and encodes it. Sample n uses noise
/// stream stream_base + n. For bidirectional reservoirs the backward pass
/// reverses the true-length portion only, so state[Tn - 1] covers the whole
/// sequence in both directions.
StateTensor encode_dataset(const Reservoir& res, const Dataset& ds, std::uint64_t stream_base = 0);

}  // namespace rmesn

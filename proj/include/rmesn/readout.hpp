#pragma once

#include "rmesn/linalg.hpp"
#include "rmesn/representation.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace rmesn {

/// Index of the largest entry of each row; the lowest index wins ties.
std::vector<int> argmax_rows(const MatrixRef& scores);

Matrix one_hot(const std::vector<int>& labels, std::size_t classes);

// ---------------------------------------------------------------------------
// Linear readout

struct RidgeModel {
  Matrix weights;  // dim x C
  Vector bias;     // C
  double lambda = 1.0;

  std::size_t classes() const noexcept { return static_cast<std::size_t>(weights.cols()); }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(weights.rows()); }
};

/// Ridge regression onto one-hot targets. Every class in [0, classes) must
/// appear in `labels`.
RidgeModel fit_ridge_classifier(const Representation& reps, const std::vector<int>& labels,
                                std::size_t classes, double lambda);
Matrix ridge_scores(const RidgeModel& model, const MatrixRef& vectors);
std::vector<int> predict_ridge(const RidgeModel& model, const Representation& reps);

// ---------------------------------------------------------------------------
// Deep readout

enum class Activation { Relu, Maxout };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view text);

struct MlpConfig {
  std::vector<std::size_t> hidden{20, 20, 20};
  Activation activation = Activation::Relu;
  std::size_t maxout_pieces = 2;
  double dropout = 0.1;  // probability of dropping a hidden activation
  double l2 = 0.001;
  std::size_t epochs = 5000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const MlpConfig&) const = default;
};

/// Affine layer. A maxout layer with k pieces and u units stores k*u rows;
/// row p*u + j is piece p of unit j.
struct DenseLayer {
  Matrix weights;  // (units * pieces) x fan_in
  Vector bias;
  std::size_t pieces = 1;

  std::size_t units() const noexcept { return static_cast<std::size_t>(weights.rows()) / pieces; }
};

class MlpReadout {
 public:
  MlpReadout() = default;
  MlpReadout(MlpConfig config, std::vector<DenseLayer> layers);

  /// Glorot-uniform weights, zero biases.
  static MlpReadout initialize(std::size_t input_dim, std::size_t classes, const MlpConfig& config);

  const MlpConfig& config() const noexcept { return config_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::size_t input_dim() const;
  std::size_t classes() const;

  /// Output scores with dropout disabled.
  Matrix logits(const MatrixRef& x) const;
  Matrix probabilities(const MatrixRef& x) const;

  /// Mean cross-entropy plus l2 * sum of squared weights (biases excluded).
  /// `masks`, when given, holds one keep-mask per hidden layer (entries 0/1);
  /// kept activations are scaled by 1 / (1 - dropout). `gradient`, when given,
  /// receives d loss / d parameter with the layer shapes.
  double loss(const MatrixRef& x, const MatrixRef& targets, const std::vector<Matrix>* masks = nullptr,
              std::vector<DenseLayer>* gradient = nullptr) const;

  /// All weights and biases, layer by layer (weights column-major, then bias).
  Vector parameters() const;
  void set_parameters(const Vector& flat);

  /// Training loss per epoch (filled by fit_mlp).
  std::vector<double> loss_history;

 private:
  MlpConfig config_;
  std::vector<DenseLayer> layers_;
};

MlpReadout fit_mlp(const Representation& reps, const std::vector<int>& labels, std::size_t classes,
                   const MlpConfig& config);
std::vector<int> predict_mlp(const MlpReadout& model, const Representation& reps);

}  // namespace rmesn

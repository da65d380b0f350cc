#include "rmesn/readout.hpp"

#include "rmesn/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace rmesn {

std::vector<int> argmax_rows(const MatrixRef& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Matrix one_hot(const std::vector<int>& labels, std::size_t classes) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw InvalidLabel("label " + std::to_string(labels[i]) + " outside [0, " +
                         std::to_string(classes) + ")");
    }
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return y;
}

// ---------------------------------------------------------------------------

RidgeModel fit_ridge_classifier(const Representation& reps, const std::vector<int>& labels,
                                std::size_t classes, double lambda) {
  if (labels.size() != reps.size()) throw InvalidArgument("one label per representation is required");
  if (classes < 2) throw InvalidArgument("a classifier needs at least two classes");
  if (reps.size() < classes) throw InvalidInput("fewer training samples than classes");
  if (!(lambda >= 0.0)) throw InvalidArgument("readout lambda must be non-negative");
  const Matrix targets = one_hot(labels, classes);
  for (Eigen::Index c = 0; c < targets.cols(); ++c) {
    if (targets.col(c).sum() == 0.0) {
      throw InvalidLabel("class " + std::to_string(c) + " has no training sample");
    }
  }
  RidgeSolution fit = ridge_solve(reps.vectors, targets, lambda);
  return RidgeModel{std::move(fit.weights), std::move(fit.bias), lambda};
}

Matrix ridge_scores(const RidgeModel& model, const MatrixRef& vectors) {
  if (static_cast<std::size_t>(vectors.cols()) != model.input_dim()) {
    throw InvalidArgument("representation has dim " + std::to_string(vectors.cols()) +
                          ", readout expects " + std::to_string(model.input_dim()));
  }
  return (vectors * model.weights).rowwise() + model.bias.transpose();
}

std::vector<int> predict_ridge(const RidgeModel& model, const Representation& reps) {
  return argmax_rows(ridge_scores(model, reps.vectors));
}

// ---------------------------------------------------------------------------

std::string_view to_string(Activation act) { return act == Activation::Relu ? "relu" : "maxout"; }

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::Relu;
  if (text == "maxout") return Activation::Maxout;
  throw InvalidArgument("unknown activation '" + std::string(text) + "'");
}

void MlpConfig::validate() const {
  if (hidden.empty()) throw InvalidArgument("the deep readout needs at least one hidden layer");
  for (auto h : hidden) {
    if (h == 0) throw InvalidArgument("hidden layers must have at least one unit");
  }
  if (maxout_pieces < 1) throw InvalidArgument("maxout needs at least one piece");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
  if (!(l2 >= 0.0)) throw InvalidArgument("l2 penalty must be non-negative");
  if (!(learning_rate > 0.0) || !(epsilon > 0.0)) throw InvalidArgument("invalid optimizer settings");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("moment decays must lie in [0, 1)");
  }
}

MlpReadout::MlpReadout(MlpConfig config, std::vector<DenseLayer> layers)
    : config_(std::move(config)), layers_(std::move(layers)) {
  config_.validate();
  if (layers_.size() != config_.hidden.size() + 1) {
    throw InvalidArgument("layer count does not match the hidden layer configuration");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const bool hidden = l + 1 < layers_.size();
    const std::size_t pieces = hidden && config_.activation == Activation::Maxout ? config_.maxout_pieces : 1;
    if (layer.pieces != pieces || layer.weights.rows() != layer.bias.size() ||
        static_cast<std::size_t>(layer.weights.rows()) % pieces != 0) {
      throw InvalidArgument("layer " + std::to_string(l) + " has inconsistent shapes");
    }
    if (hidden && layer.units() != config_.hidden[l]) {
      throw InvalidArgument("layer " + std::to_string(l) + " width differs from the configuration");
    }
    if (l > 0 && static_cast<std::size_t>(layer.weights.cols()) != layers_[l - 1].units()) {
      throw InvalidArgument("layer " + std::to_string(l) + " does not chain with its predecessor");
    }
  }
}

MlpReadout MlpReadout::initialize(std::size_t input_dim, std::size_t classes, const MlpConfig& config) {
  config.validate();
  if (input_dim < 1 || classes < 1) throw InvalidArgument("deep readout needs positive input and output sizes");
  std::mt19937_64 rng(config.seed);
  std::vector<DenseLayer> layers;
  std::size_t fan_in = input_dim;
  for (std::size_t l = 0; l <= config.hidden.size(); ++l) {
    const bool hidden = l < config.hidden.size();
    const std::size_t units = hidden ? config.hidden[l] : classes;
    const std::size_t pieces = hidden && config.activation == Activation::Maxout ? config.maxout_pieces : 1;
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + units));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer;
    layer.pieces = pieces;
    layer.weights.resize(static_cast<Eigen::Index>(units * pieces), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = dist(rng);
    layer.bias = Vector::Zero(layer.weights.rows());
    layers.push_back(std::move(layer));
    fan_in = units;
  }
  return MlpReadout(config, std::move(layers));
}

std::size_t MlpReadout::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weights.cols());
}

std::size_t MlpReadout::classes() const { return layers_.empty() ? 0 : layers_.back().units(); }

namespace {

struct HiddenCache {
  Matrix input;        // activation entering the layer
  Matrix pre;          // affine output
  Eigen::MatrixXi arg; // winning maxout piece
};

Matrix affine(const Matrix& a, const DenseLayer& layer) {
  return (a * layer.weights.transpose()).rowwise() + layer.bias.transpose();
}

/// Runs the network; fills `cache` (one entry per layer, the last one only
/// carrying its input) when given.
Matrix forward(const std::vector<DenseLayer>& layers, const MlpConfig& cfg, const MatrixRef& x,
               const std::vector<Matrix>* masks, std::vector<HiddenCache>* cache) {
  Matrix a = x;
  const double keep_scale = 1.0 / (1.0 - cfg.dropout);
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    Matrix z = affine(a, layer);
    const auto units = static_cast<Eigen::Index>(layer.units());
    Matrix act(z.rows(), units);
    Eigen::MatrixXi arg;
    if (cfg.activation == Activation::Relu) {
      act = z.cwiseMax(0.0);
    } else {
      arg = Eigen::MatrixXi::Zero(z.rows(), units);
      const auto pieces = static_cast<Eigen::Index>(layer.pieces);
      for (Eigen::Index n = 0; n < z.rows(); ++n) {
        for (Eigen::Index j = 0; j < units; ++j) {
          Eigen::Index best = 0;
          for (Eigen::Index p = 1; p < pieces; ++p) {
            if (z(n, p * units + j) > z(n, best * units + j)) best = p;
          }
          act(n, j) = z(n, best * units + j);
          arg(n, j) = static_cast<int>(best);
        }
      }
    }
    if (masks != nullptr) act = act.cwiseProduct((*masks)[l]) * keep_scale;
    if (cache != nullptr) cache->push_back({std::move(a), std::move(z), std::move(arg)});
    a = std::move(act);
  }
  Matrix logits = affine(a, layers.back());
  if (cache != nullptr) cache->push_back({std::move(a), Matrix(), Eigen::MatrixXi()});
  return logits;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p = p.array().colwise() / p.rowwise().sum().array();
  return p;
}

}  // namespace

Matrix MlpReadout::logits(const MatrixRef& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim()) {
    throw InvalidArgument("representation has dim " + std::to_string(x.cols()) +
                          ", deep readout expects " + std::to_string(input_dim()));
  }
  return forward(layers_, config_, x, nullptr, nullptr);
}

Matrix MlpReadout::probabilities(const MatrixRef& x) const { return softmax_rows(logits(x)); }

double MlpReadout::loss(const MatrixRef& x, const MatrixRef& targets, const std::vector<Matrix>* masks,
                        std::vector<DenseLayer>* gradient) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim() || x.rows() != targets.rows() ||
      static_cast<std::size_t>(targets.cols()) != classes()) {
    throw InvalidArgument("deep readout loss: shape mismatch");
  }
  std::vector<HiddenCache> cache;
  const Matrix logits = forward(layers_, config_, x, masks, gradient != nullptr ? &cache : nullptr);
  const Matrix shifted = logits.colwise() - logits.rowwise().maxCoeff();
  const Vector log_norm = shifted.array().exp().rowwise().sum().log();
  const Matrix log_prob = shifted.colwise() - log_norm;
  const auto n = static_cast<double>(x.rows());
  double value = -(targets.array() * log_prob.array()).sum() / n;
  for (const auto& layer : layers_) value += config_.l2 * layer.weights.squaredNorm();
  if (gradient == nullptr) return value;

  gradient->assign(layers_.size(), DenseLayer{});
  Matrix delta = (log_prob.array().exp().matrix() - targets) / n;
  const double keep_scale = 1.0 / (1.0 - config_.dropout);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& layer = layers_[l];
    DenseLayer& g = (*gradient)[l];
    g.pieces = layer.pieces;
    g.weights = delta.transpose() * cache[l].input + 2.0 * config_.l2 * layer.weights;
    g.bias = delta.colwise().sum().transpose();
    if (l == 0) break;

    Matrix d_act = delta * layer.weights;
    if (masks != nullptr) d_act = d_act.cwiseProduct((*masks)[l - 1]) * keep_scale;
    const HiddenCache& prev = cache[l - 1];
    if (config_.activation == Activation::Relu) {
      delta = d_act.cwiseProduct((prev.pre.array() > 0.0).cast<double>().matrix());
    } else {
      const auto units = d_act.cols();
      delta = Matrix::Zero(prev.pre.rows(), prev.pre.cols());
      for (Eigen::Index r = 0; r < d_act.rows(); ++r) {
        for (Eigen::Index j = 0; j < units; ++j) delta(r, prev.arg(r, j) * units + j) = d_act(r, j);
      }
    }
  }
  return value;
}

Vector MlpReadout::parameters() const {
  Eigen::Index total = 0;
  for (const auto& l : layers_) total += l.weights.size() + l.bias.size();
  Vector flat(total);
  Eigen::Index at = 0;
  for (const auto& l : layers_) {
    flat.segment(at, l.weights.size()) = l.weights.reshaped();
    at += l.weights.size();
    flat.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return flat;
}

void MlpReadout::set_parameters(const Vector& flat) {
  Eigen::Index at = 0;
  for (auto& l : layers_) {
    if (at + l.weights.size() + l.bias.size() > flat.size()) {
      throw InvalidArgument("parameter vector is too short");
    }
    l.weights.reshaped() = flat.segment(at, l.weights.size());
    at += l.weights.size();
    l.bias = flat.segment(at, l.bias.size());
    at += l.bias.size();
  }
  if (at != flat.size()) throw InvalidArgument("parameter vector is too long");
}

namespace {

Vector flatten(const std::vector<DenseLayer>& layers) {
  Eigen::Index total = 0;
  for (const auto& l : layers) total += l.weights.size() + l.bias.size();
  Vector flat(total);
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    flat.segment(at, l.weights.size()) = l.weights.reshaped();
    at += l.weights.size();
    flat.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return flat;
}

}  // namespace

MlpReadout fit_mlp(const Representation& reps, const std::vector<int>& labels, std::size_t classes,
                   const MlpConfig& config) {
  if (reps.size() < 1) throw InvalidInput("deep readout needs at least one training sample");
  if (labels.size() != reps.size()) throw InvalidArgument("one label per representation is required");
  if (!reps.vectors.allFinite()) throw InvalidInput("non-finite representation");
  const Matrix targets = one_hot(labels, classes);

  MlpReadout model = MlpReadout::initialize(reps.dim(), classes, config);
  std::mt19937_64 rng(config.seed ^ 0x64726f706f7574ULL);
  std::bernoulli_distribution keep(1.0 - config.dropout);

  const auto n = static_cast<std::size_t>(reps.size());
  const std::size_t batch = config.batch_size == 0 ? n : std::min(config.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  Vector params = model.parameters();
  Vector m = Vector::Zero(params.size());
  Vector v = Vector::Zero(params.size());
  std::size_t step = 0;
  std::vector<DenseLayer> grad;
  std::vector<Matrix> masks;
  model.loss_history.clear();
  model.loss_history.reserve(config.epochs);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      Matrix xb(static_cast<Eigen::Index>(count), reps.vectors.cols());
      Matrix yb(static_cast<Eigen::Index>(count), targets.cols());
      for (std::size_t i = 0; i < count; ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = reps.vectors.row(static_cast<Eigen::Index>(order[start + i]));
        yb.row(static_cast<Eigen::Index>(i)) = targets.row(static_cast<Eigen::Index>(order[start + i]));
      }
      const std::vector<Matrix>* mask_ptr = nullptr;
      if (config.dropout > 0.0) {
        masks.clear();
        for (auto width : config.hidden) {
          Matrix mask(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(width));
          for (Eigen::Index k = 0; k < mask.size(); ++k) mask.data()[k] = keep(rng) ? 1.0 : 0.0;
          masks.push_back(std::move(mask));
        }
        mask_ptr = &masks;
      }
      const double value = model.loss(xb, yb, mask_ptr, &grad);
      if (!std::isfinite(value)) throw DivergenceError(epoch);
      epoch_loss += value * static_cast<double>(count) / static_cast<double>(n);

      const Vector g = flatten(grad);
      ++step;
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      params.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.epsilon);
      model.set_parameters(params);
    }
    model.loss_history.push_back(epoch_loss);
  }
  return model;
}

std::vector<int> predict_mlp(const MlpReadout& model, const Representation& reps) {
  return argmax_rows(model.logits(reps.vectors));
}

}  // namespace rmesn

#include "rmesn/representation.hpp"

#include "rmesn/error.hpp"
#include "rmesn/parallel.hpp"

#include <cmath>
#include <string>

namespace rmesn {

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("model-space lambda must be positive");
  }
}

void check_lengths(const StateTensor& states) {
  for (std::size_t n = 0; n < states.samples; ++n) {
    if (states.lengths[n] < 2) throw SampleTooShort(n, states.lengths[n]);
    if (states.lengths[n] > states.steps) {
      throw InvalidInput("sample " + std::to_string(n) + " is longer than the tensor");
    }
  }
}

/// Fits one predictor per sample. `targets(n, len)` returns the len - 1 target
/// rows aligned with states 0..len-2.
template <typename Targets>
Matrix fit_models(const StateTensor& states, std::size_t target_dim, double lambda, Targets&& targets) {
  check_lambda(lambda);
  check_lengths(states);
  const std::size_t dim = target_dim * (states.features + 1);
  Matrix out(static_cast<Eigen::Index>(states.samples), static_cast<Eigen::Index>(dim));
  parallel_for(states.samples, [&](std::size_t n) {
    const auto len = static_cast<Eigen::Index>(states.lengths[n]);
    const auto slice = states.slice(n);
    const Matrix design = slice.topRows(len - 1);
    const Matrix y = targets(n, len);
    out.row(static_cast<Eigen::Index>(n)) = pack_model(ridge_solve(design, y, lambda)).transpose();
  });
  return out;
}

}  // namespace

std::string_view to_string(RepresentationKind kind) {
  switch (kind) {
    case RepresentationKind::LastState: return "last";
    case RepresentationKind::OutputModel: return "output";
    case RepresentationKind::ReservoirModel: return "reservoir";
  }
  return "?";
}

RepresentationKind parse_representation_kind(std::string_view text) {
  if (text == "last" || text == "last-state") return RepresentationKind::LastState;
  if (text == "output" || text == "output-model") return RepresentationKind::OutputModel;
  if (text == "reservoir" || text == "reservoir-model") return RepresentationKind::ReservoirModel;
  throw InvalidArgument("unknown representation '" + std::string(text) + "'");
}

std::size_t representation_dim(RepresentationKind kind, std::size_t state_features,
                               std::size_t input_features) {
  switch (kind) {
    case RepresentationKind::LastState: return state_features;
    case RepresentationKind::OutputModel: return input_features * (state_features + 1);
    case RepresentationKind::ReservoirModel: return state_features * (state_features + 1);
  }
  return 0;
}

Vector pack_model(const RidgeSolution& fit) {
  const Eigen::Index p = fit.weights.rows();
  const Eigen::Index q = fit.weights.cols();
  Vector packed(p * q + q);
  // vec(U) with U = W^T: column j of U is row j of W.
  for (Eigen::Index j = 0; j < p; ++j) packed.segment(j * q, q) = fit.weights.row(j).transpose();
  packed.tail(q) = fit.bias;
  return packed;
}

Representation last_state(const StateTensor& states) {
  if (states.samples == 0) throw InvalidInput("last-state representation of an empty tensor");
  Representation rep;
  rep.kind = RepresentationKind::LastState;
  rep.bidirectional = states.bidirectional;
  rep.vectors.resize(static_cast<Eigen::Index>(states.samples), static_cast<Eigen::Index>(states.features));
  for (std::size_t n = 0; n < states.samples; ++n) {
    const std::size_t len = states.lengths[n];
    if (len < 1 || len > states.steps) {
      throw InvalidInput("sample " + std::to_string(n) + " has an invalid length");
    }
    rep.vectors.row(static_cast<Eigen::Index>(n)) = states.state(n, len - 1);
  }
  return rep;
}

Representation output_model(const StateTensor& states, const Dataset& inputs, double lambda) {
  if (inputs.size() != states.samples) {
    throw InvalidArgument("output model: dataset and state tensor disagree on sample count");
  }
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    if (inputs.samples[n].length != states.lengths[n]) {
      throw InvalidArgument("output model: sample " + std::to_string(n) +
                            " length differs between dataset and states");
    }
  }
  Representation rep;
  rep.kind = RepresentationKind::OutputModel;
  rep.bidirectional = states.bidirectional;
  rep.vectors = fit_models(states, inputs.feature_dim, lambda, [&](std::size_t n, Eigen::Index len) {
    return Matrix(inputs.samples[n].values.middleRows(1, len - 1));
  });
  return rep;
}

Representation reservoir_model(const StateTensor& states, double lambda) {
  Representation rep;
  rep.kind = RepresentationKind::ReservoirModel;
  rep.bidirectional = states.bidirectional;
  rep.vectors = fit_models(states, states.features, lambda, [&](std::size_t n, Eigen::Index len) {
    return Matrix(states.slice(n).middleRows(1, len - 1));
  });
  return rep;
}

Representation reservoir_model_bidirectional(const StateTensor& states, double lambda) {
  if (!states.bidirectional) {
    throw InvalidArgument("bidirectional reservoir model needs a bidirectional state tensor");
  }
  return reservoir_model(states, lambda);
}

}  // namespace rmesn

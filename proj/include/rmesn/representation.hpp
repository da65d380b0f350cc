#pragma once

#include "rmesn/dataset.hpp"
#include "rmesn/linalg.hpp"
#include "rmesn/reservoir.hpp"

#include <cstddef>
#include <string_view>

namespace rmesn {

enum class RepresentationKind {
  LastState,       // h(T)
  OutputModel,     // parameters of h(t) -> x(t+1)
  ReservoirModel,  // parameters of h(t) -> h(t+1)
};

std::string_view to_string(RepresentationKind kind);
RepresentationKind parse_representation_kind(std::string_view text);

struct Representation {
  RepresentationKind kind = RepresentationKind::LastState;
  Matrix vectors;  // N x dim
  bool bidirectional = false;

  std::size_t size() const noexcept { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors.cols()); }
};

/// Representation width for `state_features` state dims (D, or 2D for a
/// bidirectional tensor) and `input_features` input variables.
std::size_t representation_dim(RepresentationKind kind, std::size_t state_features,
                               std::size_t input_features);

/// Row n is the state at the true final step of sample n.
Representation last_state(const StateTensor& states);

/// Per sample, ridge fit of x(t+1) from h(t) over its true length.
/// Row n is [vec(U_o); u_o] with U_o of shape F x D stored column-major.
Representation output_model(const StateTensor& states, const Dataset& inputs, double lambda);

/// Per sample, ridge fit of h(t+1) from h(t). Row n is [vec(U_h); u_h].
Representation reservoir_model(const StateTensor& states, double lambda);

/// Same fit on the concatenated [forward; backward] features of a
/// bidirectional tensor.
Representation reservoir_model_bidirectional(const StateTensor& states, double lambda);

/// Packs a ridge solution (weights P x Q, bias Q) of the map y = U x + u as
/// [vec(U); u] with U = weights^T (Q x P) in column-major order.
Vector pack_model(const RidgeSolution& fit);

}  // namespace rmesn

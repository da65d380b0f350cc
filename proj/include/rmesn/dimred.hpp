#pragma once

#include "rmesn/linalg.hpp"
#include "rmesn/reservoir.hpp"

#include <cstddef>
#include <string_view>

namespace rmesn {

enum class CovarianceMode {
  Flattened,  // covariance of the NT x R mode-3 matricization
  PerSample,  // each T x R slice is one observation
};

std::string_view to_string(CovarianceMode mode);
CovarianceMode parse_covariance_mode(std::string_view text);

struct Projection {
  Matrix basis;        // R x D, orthonormal columns (E)
  Vector eigenvalues;  // D, descending
  CovarianceMode mode = CovarianceMode::PerSample;
  std::size_t fitted_feature_dim = 0;
  Vector mean;          // global state mean seen at fit time
  bool centered = false;  // subtract `mean` before projecting

  std::size_t components() const noexcept { return static_cast<std::size_t>(basis.cols()); }
};

/// Sum over the NT rows of (h_i - mean)(h_i - mean)^T / (NT - 1).
Matrix flattened_covariance(const StateTensor& states);

/// Sum over samples of (H_n - Hbar)^T (H_n - Hbar) / (N - 1), Hbar being the
/// mean T x R slice.
Matrix sample_covariance(const StateTensor& states);

Projection fit_projection(const StateTensor& states, std::size_t d, CovarianceMode mode,
                          bool centered = false);

/// Replaces every state h by E^T h (or E^T (h - mean) for centered projections).
StateTensor apply_projection(const StateTensor& states, const Projection& proj);

}  // namespace rmesn

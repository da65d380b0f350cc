#pragma once

// Dense and sparse numerical kernels shared by every stage: penalized least
// squares, symmetric eigendecomposition and spectral radius estimation.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rmesn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixRef = Eigen::Ref<const Matrix>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Immutable once built.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  /// Zero matrix of the given shape.
  SparseMatrix(std::size_t rows, std::size_t cols);
  /// Throws InvalidInput on out-of-range indices, duplicates or non-finite values.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  /// out[i * batch + b] = sum_k A(i, k) * in[k * batch + b]. Each output
  /// element accumulates its row in column order, so the result for column b
  /// does not depend on the batch width.
  void multiply(std::span<const double> in, std::span<double> out, std::size_t batch = 1) const;

  Vector operator*(const Vector& x) const;
  SparseMatrix scaled(double factor) const;
  Matrix to_dense() const;
  std::vector<Triplet> triplets() const;

  bool operator==(const SparseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_start_{0};
  std::vector<std::size_t> col_index_;
  std::vector<double> values_;
};

struct RidgeSolution {
  Matrix weights;  // P x Q
  Vector bias;     // Q
};

/// Minimizes ||design * W + 1 b^T - targets||^2 + lambda ||W||^2 with an
/// unpenalized bias, via normal equations on column-centered data. When
/// P > N the equivalent N x N (dual) system is solved instead.
RidgeSolution ridge_solve(const MatrixRef& design, const MatrixRef& targets, double lambda);

struct EigResult {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // orthonormal columns
};

/// Leading d eigenpairs of a symmetric matrix. Each eigenvector is signed so
/// that its largest-magnitude entry (first one on ties) is positive.
EigResult sym_eig_top_d(const MatrixRef& matrix, std::size_t d);

struct SpectralRadiusOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 10000;
  std::uint64_t seed = 0x5eed5eedULL;
  /// Width of the iterated block. Ritz values of the block capture complex
  /// conjugate dominant pairs, which a single vector cannot.
  std::size_t block = 8;
};

/// Largest eigenvalue magnitude via (block) power iteration with Ritz value
/// extraction. Throws ConvergenceError carrying the last estimate.
double spectral_radius(const SparseMatrix& w, const SpectralRadiusOptions& options = {});

bool all_finite(const MatrixRef& m);

}  // namespace rmesn

#include "rmesn/linalg.hpp"

#include "rmesn/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace rmesn {

bool all_finite(const MatrixRef& m) { return m.allFinite(); }

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_start_(rows + 1, 0) {}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> entries)
    : rows_(rows), cols_(cols), row_start_(rows + 1, 0) {
  for (const auto& e : entries) {
    if (e.row >= rows || e.col >= cols) {
      throw InvalidInput("sparse entry (" + std::to_string(e.row) + ", " +
                         std::to_string(e.col) + ") outside a " + std::to_string(rows) +
                         "x" + std::to_string(cols) + " matrix");
    }
    if (!std::isfinite(e.value)) throw InvalidInput("sparse entry is not finite");
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col) {
      throw InvalidInput("duplicate sparse entry (" + std::to_string(entries[k].row) + ", " +
                         std::to_string(entries[k].col) + ")");
    }
  }
  col_index_.reserve(entries.size());
  values_.reserve(entries.size());
  for (const auto& e : entries) {
    ++row_start_[e.row + 1];
    col_index_.push_back(e.col);
    values_.push_back(e.value);
  }
  std::partial_sum(row_start_.begin(), row_start_.end(), row_start_.begin());
}

void SparseMatrix::multiply(std::span<const double> in, std::span<double> out,
                            std::size_t batch) const {
  if (in.size() != cols_ * batch || out.size() != rows_ * batch) {
    throw InvalidArgument("sparse multiply: operand sizes do not match the matrix shape");
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    double* o = out.data() + i * batch;
    std::fill(o, o + batch, 0.0);
    for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) {
      const double v = values_[k];
      const double* x = in.data() + col_index_[k] * batch;
      for (std::size_t b = 0; b < batch; ++b) o[b] += v * x[b];
    }
  }
}

Vector SparseMatrix::operator*(const Vector& x) const {
  Vector y(static_cast<Eigen::Index>(rows_));
  multiply({x.data(), static_cast<std::size_t>(x.size())}, {y.data(), rows_});
  return y;
}

SparseMatrix SparseMatrix::scaled(double factor) const {
  SparseMatrix s = *this;
  for (auto& v : s.values_) v *= factor;
  return s;
}

Matrix SparseMatrix::to_dense() const {
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_index_[k])) = values_[k];
    }
  }
  return d;
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) {
      t.push_back({i, col_index_[k], values_[k]});
    }
  }
  return t;
}

RidgeSolution ridge_solve(const MatrixRef& design, const MatrixRef& targets, double lambda) {
  if (design.rows() != targets.rows()) {
    throw InvalidArgument("ridge: design has " + std::to_string(design.rows()) +
                          " rows but targets have " + std::to_string(targets.rows()));
  }
  if (design.rows() < 1) throw InvalidInput("ridge: at least one observation is required");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("ridge: lambda must be a finite non-negative number");
  }
  if (!design.allFinite() || !targets.allFinite()) {
    throw InvalidInput("ridge: non-finite value in design or targets");
  }

  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  const Eigen::RowVectorXd x_mean = design.colwise().mean();
  const Eigen::RowVectorXd y_mean = targets.colwise().mean();
  const Matrix xc = design.rowwise() - x_mean;
  const Matrix yc = targets.rowwise() - y_mean;

  RidgeSolution sol;
  if (lambda > 0.0 && p > n) {
    Matrix gram = xc * xc.transpose();
    gram.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) throw SingularSystem("ridge: dual system is not positive definite");
    sol.weights = xc.transpose() * llt.solve(yc);
  } else {
    Matrix normal = Matrix::Zero(p, p);
    normal.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
    normal = normal.selfadjointView<Eigen::Lower>();
    normal.diagonal().array() += lambda;
    const Matrix rhs = xc.transpose() * yc;
    if (lambda > 0.0) {
      Eigen::LLT<Matrix> llt(normal);
      if (llt.info() != Eigen::Success) throw SingularSystem("ridge: normal equations are not positive definite");
      sol.weights = llt.solve(rhs);
    } else {
      Eigen::LDLT<Matrix> ldlt(normal);
      const Vector pivots = ldlt.vectorD().cwiseAbs();
      if (p > 0 && (ldlt.info() != Eigen::Success || !(pivots.minCoeff() > 1e-12 * pivots.maxCoeff()))) {
        throw SingularSystem("ridge: centered normal equations are singular and lambda = 0");
      }
      sol.weights = p > 0 ? Matrix(ldlt.solve(rhs)) : Matrix(0, targets.cols());
    }
  }
  sol.bias = (y_mean - x_mean * sol.weights).transpose();
  return sol;
}

EigResult sym_eig_top_d(const MatrixRef& matrix, std::size_t d) {
  if (matrix.rows() != matrix.cols()) throw InvalidArgument("eigendecomposition needs a square matrix");
  const auto r = static_cast<std::size_t>(matrix.rows());
  if (d < 1 || d > r) {
    throw InvalidArgument("requested " + std::to_string(d) + " eigenpairs of a " +
                          std::to_string(r) + "x" + std::to_string(r) + " matrix");
  }
  if (!matrix.allFinite()) throw InvalidInput("eigendecomposition: non-finite entry");
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidInput("eigendecomposition: matrix is not symmetric");
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");

  // Solver order is ascending; reorder descending, keeping solver order on ties.
  std::vector<Eigen::Index> order(r);
  std::iota(order.begin(), order.end(), 0);
  const Vector& values = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });

  EigResult out;
  out.eigenvalues.resize(static_cast<Eigen::Index>(d));
  out.eigenvectors.resize(matrix.rows(), static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) {
    const Eigen::Index src = order[k];
    const auto dst = static_cast<Eigen::Index>(k);
    out.eigenvalues(dst) = values(src);
    auto col = out.eigenvectors.col(dst);
    col = solver.eigenvectors().col(src);
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 1; i < col.size(); ++i) {
      if (std::abs(col(i)) > std::abs(col(pivot))) pivot = i;
    }
    if (col(pivot) < 0) col = -col;
  }
  return out;
}

double spectral_radius(const SparseMatrix& w, const SpectralRadiusOptions& options) {
  if (w.rows() != w.cols()) throw InvalidArgument("spectral radius needs a square matrix");
  const std::size_t n = w.rows();
  if (n == 0 || w.nonzeros() == 0) return 0.0;

  const std::size_t p = std::clamp<std::size_t>(options.block, 1, n);
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(p);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix basis(rows, cols);
  for (Eigen::Index i = 0; i < basis.size(); ++i) basis.data()[i] = normal(rng);
  {
    Eigen::HouseholderQR<Matrix> qr(basis);
    basis = qr.householderQ() * Matrix::Identity(rows, cols);
  }

  RowMatrix image(rows, cols);
  double previous = std::numeric_limits<double>::quiet_NaN();
  double estimate = 0.0;
  int settled = 0;
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    w.multiply({basis.data(), n * p}, {image.data(), n * p}, p);
    if (image.isZero(0.0)) return 0.0;

    const Matrix projected = basis.transpose() * image;
    Eigen::EigenSolver<Matrix> ritz(projected, false);
    estimate = ritz.eigenvalues().cwiseAbs().maxCoeff();

    Eigen::HouseholderQR<Matrix> qr(image);
    basis = qr.householderQ() * Matrix::Identity(rows, cols);

    if (std::abs(estimate - previous) <= options.tolerance) {
      if (++settled >= 2) return estimate;
    } else {
      settled = 0;
    }
    previous = estimate;
  }
  throw ConvergenceError("spectral radius: power iteration did not converge after " +
                             std::to_string(options.max_iterations) + " iterations",
                         estimate);
}

}  // namespace rmesn

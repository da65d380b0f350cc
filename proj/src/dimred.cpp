#include "rmesn/dimred.hpp"

#include "rmesn/error.hpp"
#include "rmesn/parallel.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace rmesn {

namespace {

constexpr Eigen::Index kBlockRows = 256;

/// Kahan-compensated running sum of equally shaped matrices.
class CompensatedSum {
 public:
  CompensatedSum(Eigen::Index rows, Eigen::Index cols)
      : sum_(Matrix::Zero(rows, cols)), carry_(Matrix::Zero(rows, cols)) {}

  void add(const Matrix& term) {
    for (Eigen::Index k = 0; k < sum_.size(); ++k) {
      const double y = term.data()[k] - carry_.data()[k];
      const double t = sum_.data()[k] + y;
      carry_.data()[k] = (t - sum_.data()[k]) - y;
      sum_.data()[k] = t;
    }
  }
  const Matrix& value() const { return sum_; }

 private:
  Matrix sum_;
  Matrix carry_;
};

/// Accumulates per-block results in block order, computing up to
/// num_threads() blocks concurrently. The result does not depend on the
/// thread count.
template <typename BlockFn>
Matrix ordered_block_sum(Eigen::Index total_rows, Eigen::Index out_rows, Eigen::Index out_cols,
                         BlockFn&& block_fn) {
  const auto blocks = static_cast<std::size_t>((total_rows + kBlockRows - 1) / kBlockRows);
  const std::size_t wave = std::max<std::size_t>(1, num_threads());
  CompensatedSum acc(out_rows, out_cols);
  std::vector<Matrix> partial(std::min(wave, blocks));
  for (std::size_t start = 0; start < blocks; start += wave) {
    const std::size_t count = std::min(wave, blocks - start);
    parallel_for(count, [&](std::size_t w) {
      const auto b = static_cast<Eigen::Index>(start + w);
      const Eigen::Index first = b * kBlockRows;
      partial[w] = block_fn(first, std::min(kBlockRows, total_rows - first));
    });
    for (std::size_t w = 0; w < count; ++w) acc.add(partial[w]);
  }
  return acc.value();
}

Eigen::RowVectorXd row_mean(const RowMatrix& data) {
  const Matrix sum = ordered_block_sum(data.rows(), 1, data.cols(), [&](Eigen::Index first, Eigen::Index rows) {
    return Matrix(data.middleRows(first, rows).colwise().sum());
  });
  return sum.row(0) / static_cast<double>(data.rows());
}

Matrix centered_gram(const StateTensor& states, const RowMatrix& offsets, bool per_step) {
  const auto r = static_cast<Eigen::Index>(states.features);
  const auto steps = static_cast<Eigen::Index>(states.steps);
  Matrix gram = ordered_block_sum(states.data.rows(), r, r, [&](Eigen::Index first, Eigen::Index rows) {
    RowMatrix block = states.data.middleRows(first, rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      block.row(i) -= per_step ? offsets.row((first + i) % steps) : offsets.row(0);
    }
    Matrix g = Matrix::Zero(r, r);
    g.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
    return g;
  });
  Matrix full = gram.selfadjointView<Eigen::Lower>();
  return full;
}

void check_tensor(const StateTensor& states) {
  if (states.data.rows() != static_cast<Eigen::Index>(states.samples * states.steps) ||
      states.data.cols() != static_cast<Eigen::Index>(states.features)) {
    throw InvalidArgument("state tensor storage does not match its declared shape");
  }
  if (!states.data.allFinite()) throw InvalidInput("state tensor has non-finite entries");
}

}  // namespace

std::string_view to_string(CovarianceMode mode) {
  return mode == CovarianceMode::Flattened ? "flattened" : "per-sample";
}

CovarianceMode parse_covariance_mode(std::string_view text) {
  if (text == "flattened") return CovarianceMode::Flattened;
  if (text == "per-sample" || text == "per_sample") return CovarianceMode::PerSample;
  throw InvalidArgument("unknown covariance mode '" + std::string(text) + "'");
}

Matrix flattened_covariance(const StateTensor& states) {
  check_tensor(states);
  const std::size_t rows = states.samples * states.steps;
  if (rows < 2) throw InvalidInput("flattened covariance needs at least two state vectors");
  RowMatrix mean = row_mean(states.data);
  return centered_gram(states, mean, false) / static_cast<double>(rows - 1);
}

Matrix sample_covariance(const StateTensor& states) {
  check_tensor(states);
  if (states.samples < 2) throw InvalidInput("per-sample covariance needs at least two samples");
  const auto steps = static_cast<Eigen::Index>(states.steps);
  const auto r = static_cast<Eigen::Index>(states.features);
  // Mean slice: sum of the T x R slices in sample order.
  CompensatedSum slice_sum(steps, r);
  for (std::size_t n = 0; n < states.samples; ++n) slice_sum.add(Matrix(states.slice(n)));
  const RowMatrix mean_slice = slice_sum.value() / static_cast<double>(states.samples);
  return centered_gram(states, mean_slice, true) / static_cast<double>(states.samples - 1);
}

Projection fit_projection(const StateTensor& states, std::size_t d, CovarianceMode mode,
                          bool centered) {
  if (d < 1 || d > states.features) {
    throw InvalidArgument("cannot keep " + std::to_string(d) + " components of " +
                          std::to_string(states.features) + " features");
  }
  const Matrix cov = mode == CovarianceMode::Flattened ? flattened_covariance(states)
                                                       : sample_covariance(states);
  EigResult eig = sym_eig_top_d(cov, d);

  Projection proj;
  proj.basis = std::move(eig.eigenvectors);
  proj.eigenvalues = std::move(eig.eigenvalues);
  proj.mode = mode;
  proj.fitted_feature_dim = states.features;
  proj.mean = row_mean(states.data).transpose();
  proj.centered = centered;
  return proj;
}

StateTensor apply_projection(const StateTensor& states, const Projection& proj) {
  if (states.features != proj.fitted_feature_dim ||
      static_cast<std::size_t>(proj.basis.rows()) != states.features) {
    throw InvalidArgument("projection was fitted on " + std::to_string(proj.fitted_feature_dim) +
                          " features, states have " + std::to_string(states.features));
  }
  StateTensor out;
  out.samples = states.samples;
  out.steps = states.steps;
  out.features = proj.components();
  out.lengths = states.lengths;
  out.bidirectional = states.bidirectional;
  if (proj.centered) {
    out.data = (states.data.rowwise() - proj.mean.transpose()) * proj.basis;
  } else {
    out.data = states.data * proj.basis;
  }
  return out;
}

}  // namespace rmesn

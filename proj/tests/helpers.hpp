#pragma once

#include "oracles.hpp"
#include "rmesn/dataset.hpp"
#include "rmesn/linalg.hpp"
#include "rmesn/reservoir.hpp"

#include <cstdint>
#include <random>

namespace testing {

inline rmesn::Matrix to_eigen(const oracle::Mat& m) {
  rmesn::Matrix out(static_cast<Eigen::Index>(m.size()), m.empty() ? 0 : static_cast<Eigen::Index>(m[0].size()));
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return out;
}

inline oracle::Mat from_eigen(const rmesn::MatrixRef& m) {
  oracle::Mat out = oracle::zeros(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

inline double max_abs_diff(const rmesn::MatrixRef& a, const rmesn::MatrixRef& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline rmesn::Matrix random_eigen(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  rmesn::Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Dataset from explicit samples, lengths taken from the row counts.
inline rmesn::Dataset make_dataset(std::vector<rmesn::Matrix> samples, std::vector<int> labels, std::size_t classes) {
  rmesn::Dataset ds;
  ds.feature_dim = static_cast<std::size_t>(samples.front().cols());
  for (auto& s : samples) ds.samples.emplace_back(std::move(s));
  ds.labels = std::move(labels);
  ds.num_classes = classes;
  return ds;
}

/// Tensor with given per-sample slices (T x R each, equal T).
inline rmesn::StateTensor make_tensor(const std::vector<rmesn::Matrix>& slices) {
  rmesn::StateTensor st;
  st.samples = slices.size();
  st.steps = static_cast<std::size_t>(slices.front().rows());
  st.features = static_cast<std::size_t>(slices.front().cols());
  st.data.resize(static_cast<Eigen::Index>(st.samples * st.steps), static_cast<Eigen::Index>(st.features));
  for (std::size_t n = 0; n < st.samples; ++n) {
    st.data.middleRows(static_cast<Eigen::Index>(n * st.steps), static_cast<Eigen::Index>(st.steps)) = slices[n];
  }
  st.lengths.assign(st.samples, st.steps);
  return st;
}

/// Reservoir with a zero noise level, handy for exact recursion checks.
inline rmesn::ReservoirConfig quiet_config(std::size_t units, std::uint64_t seed) {
  rmesn::ReservoirConfig c;
  c.units = units;
  c.noise_level = 0.0;
  c.seed = seed;
  return c;
}

}  // namespace testing

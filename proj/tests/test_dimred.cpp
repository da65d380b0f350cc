#include "helpers.hpp"
#include "rmesn/dimred.hpp"
#include "rmesn/error.hpp"
#include "rmesn/parallel.hpp"

#include <doctest.h>

using namespace rmesn;
using testing::from_eigen;
using testing::make_tensor;
using testing::max_abs_diff;
using testing::to_eigen;

namespace {

std::vector<Matrix> random_slices(std::size_t n, Eigen::Index t, Eigen::Index r, std::uint64_t seed) {
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(testing::random_eigen(t, r, seed + i));
  return out;
}

oracle::Mat flatten_rows(const std::vector<Matrix>& slices) {
  oracle::Mat rows;
  for (const auto& s : slices) {
    auto m = from_eigen(s);
    rows.insert(rows.end(), m.begin(), m.end());
  }
  return rows;
}

}  // namespace

TEST_CASE("flattened covariance: trivial cases") {
  CHECK(flattened_covariance(make_tensor({Matrix::Ones(3, 2), Matrix::Ones(3, 2)})).cwiseAbs().maxCoeff() == 0.0);
  Matrix s(2, 1);
  s << 0, 2;
  const Matrix c = flattened_covariance(make_tensor({s}));
  CHECK(c.rows() == 1);
  CHECK(c(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("flattened covariance: seeded 4x3x5 matches the two-loop oracle") {
  const auto slices = random_slices(4, 3, 5, 100);
  const Matrix c = flattened_covariance(make_tensor(slices));
  CHECK(max_abs_diff(c, to_eigen(oracle::row_covariance(flatten_rows(slices)))) <= 1e-10);
}

TEST_CASE("per-sample covariance: trivial cases") {
  const Matrix same = testing::random_eigen(3, 2, 1);
  CHECK(sample_covariance(make_tensor({same, same, same})).cwiseAbs().maxCoeff() <= 1e-15);
  Matrix a(1, 1), b(1, 1);
  a << 0;
  b << 2;
  CHECK(sample_covariance(make_tensor({a, b}))(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("per-sample covariance: seeded tensors match the slice-loop oracle") {
  for (auto [n, t, r] : {std::tuple{3, 2, 2}, std::tuple{6, 4, 5}}) {
    const auto slices = random_slices(static_cast<std::size_t>(n), t, r, 200);
    std::vector<oracle::Mat> os;
    for (const auto& s : slices) os.push_back(from_eigen(s));
    CHECK(max_abs_diff(sample_covariance(make_tensor(slices)), to_eigen(oracle::slice_covariance(os))) <= 1e-10);
  }
}

TEST_CASE("covariances: symmetric and positive semidefinite") {
  const auto st = make_tensor(random_slices(7, 6, 9, 300));
  for (const Matrix& c : {flattened_covariance(st), sample_covariance(st)}) {
    CHECK(max_abs_diff(c, c.transpose()) <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("covariances: N = 1 works flattened and fails per-sample") {
  const auto st = make_tensor(random_slices(1, 5, 3, 400));
  CHECK_NOTHROW(flattened_covariance(st));
  CHECK_THROWS_AS(sample_covariance(st), InvalidInput);
}

TEST_CASE("covariances: thread count does not change a bit") {
  const auto st = make_tensor(random_slices(40, 30, 20, 500));
  set_num_threads(1);
  const Matrix a = flattened_covariance(st), b = sample_covariance(st);
  set_num_threads(8);
  const Matrix c = flattened_covariance(st), d = sample_covariance(st);
  set_num_threads(0);
  CHECK(a == c);
  CHECK(b == d);
}

TEST_CASE("fit_projection: full basis is orthogonal") {
  const auto st = make_tensor(random_slices(10, 5, 6, 600));
  const Projection p = fit_projection(st, 6, CovarianceMode::PerSample);
  CHECK(p.components() == 6);
  CHECK(max_abs_diff(p.basis * p.basis.transpose(), Matrix::Identity(6, 6)) <= 1e-8);
  CHECK(max_abs_diff(p.basis.transpose() * p.basis, Matrix::Identity(6, 6)) <= 1e-8);
  for (Eigen::Index i = 1; i < 6; ++i) CHECK(p.eigenvalues(i) <= p.eigenvalues(i - 1));
  CHECK(p.eigenvalues.minCoeff() >= -1e-10);
}

TEST_CASE("fit_projection: per-sample eigenvalues match the Jacobi oracle") {
  const auto slices = random_slices(8, 4, 5, 700);
  std::vector<oracle::Mat> os;
  for (const auto& s : slices) os.push_back(from_eigen(s));
  const auto [vals, vecs] = oracle::jacobi_eig(oracle::slice_covariance(os));
  const Projection p = fit_projection(make_tensor(slices), 3, CovarianceMode::PerSample);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(p.eigenvalues(static_cast<Eigen::Index>(i)) - vals[i]) <= 1e-8);
}

TEST_CASE("fit_projection: captured variance grows to one") {
  const auto st = make_tensor(random_slices(12, 5, 7, 800));
  const Matrix cov = sample_covariance(st);
  double previous = 0.0;
  for (std::size_t d = 1; d <= 7; ++d) {
    const double captured = fit_projection(st, d, CovarianceMode::PerSample).eigenvalues.sum() / cov.trace();
    CHECK(captured >= previous - 1e-12);
    previous = captured;
  }
  CHECK(previous == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("fit_projection: errors") {
  const auto st = make_tensor(random_slices(4, 3, 5, 900));
  CHECK_THROWS_AS(fit_projection(st, 0, CovarianceMode::Flattened), InvalidArgument);
  CHECK_THROWS_AS(fit_projection(st, 6, CovarianceMode::Flattened), InvalidArgument);
  CHECK(parse_covariance_mode("flattened") == CovarianceMode::Flattened);
  CHECK(parse_covariance_mode("per-sample") == CovarianceMode::PerSample);
  CHECK_THROWS_AS(parse_covariance_mode("bogus"), InvalidArgument);
}

TEST_CASE("apply_projection: identity basis, shape and reconstruction error") {
  const auto st = make_tensor(random_slices(5, 4, 6, 1000));
  Projection id;
  id.basis = Matrix::Identity(6, 6);
  id.eigenvalues = Vector::Ones(6);
  id.fitted_feature_dim = 6;
  id.mean = Vector::Zero(6);
  CHECK(apply_projection(st, id).data == st.data);

  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t d = 1; d <= 6; ++d) {
    const Projection p = fit_projection(st, d, CovarianceMode::Flattened);
    const StateTensor reduced = apply_projection(st, p);
    CHECK(reduced.features == d);
    CHECK(reduced.lengths == st.lengths);
    const double err = (Matrix(st.data) - Matrix(reduced.data) * p.basis.transpose()).norm();
    CHECK(err <= previous + 1e-10);
    previous = err;
  }
  CHECK(previous <= 1e-10);
}

TEST_CASE("apply_projection: distances never grow and mismatched widths fail") {
  const auto st = make_tensor(random_slices(6, 3, 8, 1100));
  const Projection p = fit_projection(st, 3, CovarianceMode::PerSample);
  const StateTensor r = apply_projection(st, p);
  for (Eigen::Index i = 0; i + 1 < st.data.rows(); ++i) {
    CHECK((r.data.row(i) - r.data.row(i + 1)).norm() <= (st.data.row(i) - st.data.row(i + 1)).norm() + 1e-10);
  }
  const auto other = make_tensor(random_slices(3, 2, 4, 1200));
  CHECK_THROWS_AS(apply_projection(other, p), InvalidArgument);
}

TEST_CASE("apply_projection: centered variant subtracts the stored mean") {
  const auto st = make_tensor(random_slices(6, 3, 4, 1300));
  const Projection p = fit_projection(st, 4, CovarianceMode::Flattened, true);
  CHECK(p.centered);
  const StateTensor r = apply_projection(st, p);
  const Matrix expected = (Matrix(st.data).rowwise() - p.mean.transpose()) * p.basis;
  CHECK(max_abs_diff(Matrix(r.data), expected) <= 1e-12);
}

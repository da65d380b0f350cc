#include "helpers.hpp"
#include "rmesn/error.hpp"
#include "rmesn/parallel.hpp"
#include "rmesn/reservoir.hpp"

#include <doctest.h>

using namespace rmesn;
using testing::from_eigen;
using testing::max_abs_diff;
using testing::to_eigen;

TEST_CASE("build_reservoir: defaults satisfy the weight invariants") {
  ReservoirConfig c;  // R=800, rho=0.99, beta=0.25, omega=0.15, xi=0.01
  c.seed = 42;
  const Reservoir res = build_reservoir(c, 12);
  CHECK(res.units() == 800);
  CHECK(res.w_in().rows() == 800);
  CHECK(res.w_in().cols() == 12);
  CHECK(res.w_in().cwiseAbs().maxCoeff() <= 0.15);
  CHECK(std::abs(spectral_radius(res.w_r()) - 0.99) <= 1e-6);
  const double density = static_cast<double>(res.w_r().nonzeros()) / (800.0 * 800.0);
  CHECK(std::abs(density - 0.25) <= 0.02);
}

TEST_CASE("build_reservoir: zero spectral radius gives zero recurrent weights") {
  ReservoirConfig c = testing::quiet_config(30, 1);
  c.spectral_radius = 0.0;
  const Reservoir res = build_reservoir(c, 2);
  CHECK(res.w_r().nonzeros() == 0);
}

TEST_CASE("build_reservoir: same seed is bit-identical, other seeds differ") {
  ReservoirConfig c = testing::quiet_config(50, 7);
  CHECK(build_reservoir(c, 3) == build_reservoir(c, 3));
  ReservoirConfig d = c;
  d.seed = 8;
  CHECK_FALSE(build_reservoir(c, 3) == build_reservoir(d, 3));
}

TEST_CASE("build_reservoir: invalid configurations") {
  ReservoirConfig c = testing::quiet_config(10, 0);
  c.connectivity = 0.0;
  CHECK_THROWS_AS(build_reservoir(c, 1), InvalidArgument);
  c = testing::quiet_config(0, 0);
  CHECK_THROWS_AS(build_reservoir(c, 1), InvalidArgument);
  c = testing::quiet_config(10, 0);
  c.noise_level = -1.0;
  CHECK_THROWS_AS(build_reservoir(c, 1), InvalidArgument);
  CHECK_THROWS_AS(build_reservoir(testing::quiet_config(10, 0), 0), InvalidArgument);
}

TEST_CASE("run_states: zero input without noise stays at the origin") {
  const Reservoir res = build_reservoir(testing::quiet_config(40, 3), 2);
  const Matrix h = run_states(res, Matrix::Zero(6, 2));
  CHECK(h.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("run_states: T = 1 is tanh(W_in x)") {
  const Reservoir res = build_reservoir(testing::quiet_config(25, 4), 3);
  Matrix x(1, 3);
  x << 0.3, -1.2, 2.0;
  const Matrix h = run_states(res, x);
  const Vector ref = (res.w_in() * x.row(0).transpose()).array().tanh();
  CHECK(max_abs_diff(h.row(0).transpose(), ref) <= 1e-15);
}

TEST_CASE("run_states: hand-set R = 2 toy matches the unrolled recursion") {
  ReservoirConfig c = testing::quiet_config(2, 0);
  Matrix w_in(2, 1);
  w_in << 0.5, -0.3;
  const SparseMatrix w_r(2, 2, {{0, 0, 0.1}, {0, 1, 0.4}, {1, 0, -0.2}, {1, 1, 0.3}});
  const Reservoir res(c, w_in, w_r);
  Matrix x(3, 1);
  x << 1.0, -2.0, 0.5;
  const Matrix h = run_states(res, x);
  const auto ref = oracle::esn_recursion(from_eigen(w_in), from_eigen(w_r.to_dense()), from_eigen(x));
  CHECK(max_abs_diff(h, to_eigen(ref)) <= 1e-12);
}

TEST_CASE("run_states: random reservoir matches the unrolled recursion") {
  const Reservoir res = build_reservoir(testing::quiet_config(30, 5), 4);
  const Matrix x = testing::random_eigen(12, 4, 6);
  const auto ref = oracle::esn_recursion(from_eigen(res.w_in()), from_eigen(res.w_r().to_dense()), from_eigen(x));
  CHECK(max_abs_diff(run_states(res, x), to_eigen(ref)) <= 1e-12);
}

TEST_CASE("run_states: noise is seeded per stream") {
  ReservoirConfig c = testing::quiet_config(20, 9);
  c.noise_level = 0.05;
  const Reservoir res = build_reservoir(c, 2);
  const Matrix x = testing::random_eigen(10, 2, 1);
  CHECK(run_states(res, x, 3) == run_states(res, x, 3));
  CHECK_FALSE(run_states(res, x, 3) == run_states(res, x, 4));
}

TEST_CASE("run_states: states are bounded and causal") {
  const Reservoir res = build_reservoir(testing::quiet_config(50, 2), 3);
  Matrix x = testing::random_eigen(20, 3, 2) * 5.0;
  const Matrix h = run_states(res, x);
  CHECK(h.cwiseAbs().maxCoeff() < 1.0);
  Matrix changed = x;
  changed.bottomRows(8) = testing::random_eigen(8, 3, 99);
  const Matrix h2 = run_states(res, changed);
  CHECK(h.topRows(12) == h2.topRows(12));
}

TEST_CASE("run_states_bidirectional: shape, palindrome and reversal") {
  const Reservoir res = build_reservoir(testing::quiet_config(30, 8), 2);
  Matrix x(5, 2);
  x << 1, 0, 2, -1, 3, 0.5, 2, -1, 1, 0;  // palindromic
  const Matrix hb = run_states_bidirectional(res, x);
  CHECK(hb.cols() == 60);
  CHECK(max_abs_diff(hb.leftCols(30), hb.rightCols(30)) <= 1e-12);

  const Matrix y = testing::random_eigen(7, 2, 3);
  const Matrix b = run_states_bidirectional(res, y);
  const Matrix backward = run_states(res, y.colwise().reverse());
  CHECK(max_abs_diff(b.leftCols(30), run_states(res, y)) <= 1e-12);
  CHECK(max_abs_diff(b.rightCols(30), backward) <= 1e-12);
}

TEST_CASE("encode_dataset: N = 1 reproduces run_states") {
  ReservoirConfig c = testing::quiet_config(20, 4);
  c.noise_level = 0.01;
  const Reservoir res = build_reservoir(c, 3);
  const Matrix x = testing::random_eigen(6, 3, 4);
  const Dataset ds = testing::make_dataset({x}, {0}, 1);
  const StateTensor st = encode_dataset(res, ds, 0);
  CHECK(st.samples == 1);
  CHECK(st.steps == 6);
  CHECK(Matrix(st.slice(0)) == run_states(res, x, 0));
}

TEST_CASE("encode_dataset: padded sample keeps its unpadded prefix") {
  const Reservoir res = build_reservoir(testing::quiet_config(20, 4), 2);
  const Matrix a = testing::random_eigen(3, 2, 1);
  const Matrix b = testing::random_eigen(5, 2, 2);
  const Dataset ds = testing::make_dataset({a, b}, {0, 1}, 2);
  const StateTensor st = encode_dataset(res, ds);
  CHECK(st.steps == 5);
  CHECK(st.lengths == std::vector<std::size_t>{3, 5});
  CHECK(max_abs_diff(st.slice(0).topRows(3), run_states(res, a)) <= 1e-15);
  CHECK(max_abs_diff(st.slice(1), run_states(res, b)) <= 1e-15);
}

TEST_CASE("encode_dataset: bidirectional backward pass covers the true length") {
  const Reservoir res = [] {
    ReservoirConfig c = testing::quiet_config(15, 6);
    c.bidirectional = true;
    return build_reservoir(c, 2);
  }();
  const Matrix a = testing::random_eigen(3, 2, 7);
  const Matrix b = testing::random_eigen(6, 2, 8);
  const StateTensor st = encode_dataset(res, testing::make_dataset({a, b}, {0, 0}, 1));
  CHECK(st.features == 30);
  CHECK(st.bidirectional);
  CHECK(max_abs_diff(st.slice(0).topRows(3), run_states_bidirectional(res, a)) <= 1e-12);
}

TEST_CASE("encode_dataset: Japanese Vowels tensor shape") {
  const Dataset ds = load_dataset(std::string(RMESN_TEST_DATA_DIR) + "/japanese_vowels_train.txt");
  ReservoirConfig c;
  const Reservoir res = build_reservoir(c, ds.feature_dim);
  const StateTensor st = encode_dataset(res, zero_pad(ds));
  CHECK(st.samples == 270);
  CHECK(st.features == 800);
  // The training split's longest utterance is 26 steps; the test split reaches 29.
  CHECK(st.steps == ds.t_max());
  const Dataset test = load_dataset(std::string(RMESN_TEST_DATA_DIR) + "/japanese_vowels_test.txt");
  CHECK(std::max(ds.t_max(), test.t_max()) == 29);
}

TEST_CASE("encode_dataset: bit-identical across thread counts") {
  ReservoirConfig c = testing::quiet_config(60, 11);
  c.noise_level = 0.01;
  const Reservoir res = build_reservoir(c, 3);
  std::vector<Matrix> samples;
  std::vector<int> labels;
  for (int i = 0; i < 70; ++i) {
    samples.push_back(testing::random_eigen(5 + i % 7, 3, static_cast<std::uint64_t>(i)));
    labels.push_back(0);
  }
  const Dataset ds = testing::make_dataset(samples, labels, 1);
  set_num_threads(1);
  const StateTensor one = encode_dataset(res, ds);
  set_num_threads(8);
  const StateTensor eight = encode_dataset(res, ds);
  set_num_threads(0);
  CHECK(one.data == eight.data);
}

TEST_CASE("echo-state contraction: different initial states converge") {
  ReservoirConfig c = testing::quiet_config(100, 13);
  c.spectral_radius = 0.5;
  c.input_scaling = 0.1;
  const Reservoir res = build_reservoir(c, 1);
  const Matrix w_r = res.w_r().to_dense();
  const Matrix x = testing::random_eigen(200, 1, 14);
  Vector ha = Vector::Random(100), hb = Vector::Random(100);
  for (Eigen::Index t = 0; t < 200; ++t) {
    const Vector drive = res.w_in() * x.row(t).transpose();
    ha = (drive + w_r * ha).array().tanh();
    hb = (drive + w_r * hb).array().tanh();
  }
  CHECK((ha - hb).norm() <= 1e-3);
}

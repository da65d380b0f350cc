#include "helpers.hpp"
#include "rmesn/error.hpp"
#include "rmesn/readout.hpp"

#include <doctest.h>

using namespace rmesn;
using testing::from_eigen;
using testing::max_abs_diff;
using testing::to_eigen;

namespace {

Representation reps_of(Matrix v) {
  Representation r;
  r.kind = RepresentationKind::LastState;
  r.vectors = std::move(v);
  return r;
}

MlpConfig small_config(Activation act, std::size_t pieces = 2) {
  MlpConfig c;
  c.hidden = {4, 3};
  c.activation = act;
  c.maxout_pieces = pieces;
  c.dropout = 0.0;
  c.l2 = 0.01;
  c.epochs = 50;
  c.seed = 3;
  return c;
}

std::vector<oracle::Layer> to_oracle(const MlpReadout& m) {
  std::vector<oracle::Layer> out;
  for (const auto& l : m.layers()) {
    oracle::Layer o;
    o.w = from_eigen(l.weights);
    o.b.assign(l.bias.data(), l.bias.data() + l.bias.size());
    o.pieces = l.pieces;
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace

TEST_CASE("argmax_rows: lowest index wins ties") {
  Matrix s(3, 3);
  s << 1, 2, 2, 5, 5, 5, -1, -3, -2;
  CHECK(argmax_rows(s) == std::vector<int>{1, 0, 0});
}

TEST_CASE("argmax_rows: matches a scalar loop on random scores") {
  const Matrix s = testing::random_eigen(50, 7, 1);
  const auto got = argmax_rows(s);
  for (Eigen::Index i = 0; i < 50; ++i) {
    int best = 0;
    for (int c = 1; c < 7; ++c)
      if (s(i, c) > s(i, best)) best = c;
    CHECK(got[static_cast<std::size_t>(i)] == best);
  }
}

TEST_CASE("ridge readout: separable pair is classified correctly") {
  Matrix x(4, 1);
  x << -2, -1, 1, 2;
  const RidgeModel m = fit_ridge_classifier(reps_of(x), {0, 0, 1, 1}, 2, 0.1);
  CHECK(predict_ridge(m, reps_of(x)) == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("ridge readout: 3 classes, 12 samples match the oracle on one-hot targets") {
  const Matrix x = testing::random_eigen(12, 5, 2);
  std::vector<int> labels;
  for (int i = 0; i < 12; ++i) labels.push_back(i % 3);
  const RidgeModel m = fit_ridge_classifier(reps_of(x), labels, 3, 0.5);
  const auto o = oracle::ridge(from_eigen(x), from_eigen(one_hot(labels, 3)), 0.5);
  CHECK(max_abs_diff(m.weights, to_eigen(o.weights)) <= 1e-10);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(m.bias(c) - o.bias[static_cast<std::size_t>(c)]) <= 1e-10);
}

TEST_CASE("ridge readout: bias alone decides with zero weights") {
  RidgeModel m{Matrix::Zero(2, 2), Vector::Zero(2), 1.0};
  m.bias << 0, 1;
  CHECK(predict_ridge(m, reps_of(testing::random_eigen(3, 2, 3))) == std::vector<int>{1, 1, 1});
  m.bias << 1, 1;
  CHECK(predict_ridge(m, reps_of(testing::random_eigen(2, 2, 4))) == std::vector<int>{0, 0});
}

TEST_CASE("ridge readout: errors") {
  const Matrix x = testing::random_eigen(4, 2, 5);
  CHECK_THROWS_AS(fit_ridge_classifier(reps_of(x), {0, 1, 0}, 2, 1.0), InvalidArgument);
  CHECK_THROWS_AS(fit_ridge_classifier(reps_of(x), {0, 0, 0, 0}, 2, 1.0), InvalidLabel);
  CHECK_THROWS_AS(fit_ridge_classifier(reps_of(x), {0, 1, 0, 5}, 2, 1.0), InvalidLabel);
  CHECK_THROWS_AS(fit_ridge_classifier(reps_of(x), {0, 1, 0, 1}, 2, -1.0), InvalidArgument);
  Matrix dup(4, 2);
  dup << 1, 1, 2, 2, 3, 3, 4, 4;
  CHECK_THROWS_AS(fit_ridge_classifier(reps_of(dup), {0, 1, 0, 1}, 2, 0.0), SingularSystem);
  const RidgeModel m = fit_ridge_classifier(reps_of(x), {0, 1, 0, 1}, 2, 1.0);
  CHECK_THROWS_AS(predict_ridge(m, reps_of(testing::random_eigen(2, 3, 6))), InvalidArgument);
}

TEST_CASE("mlp: forward pass matches the scalar oracle") {
  const Matrix x = testing::random_eigen(10, 6, 7);
  for (Activation act : {Activation::Relu, Activation::Maxout}) {
    const MlpReadout m = MlpReadout::initialize(6, 3, small_config(act));
    const Matrix logits = m.logits(x);
    const auto layers = to_oracle(m);
    for (Eigen::Index i = 0; i < 10; ++i) {
      const auto ref = oracle::mlp_forward(layers, from_eigen(x.row(i))[0], act == Activation::Relu);
      for (Eigen::Index c = 0; c < 3; ++c) CHECK(std::abs(logits(i, c) - ref[static_cast<std::size_t>(c)]) <= 1e-10);
    }
  }
}

TEST_CASE("mlp: analytic gradient matches central differences") {
  const Matrix x = testing::random_eigen(5, 4, 8);
  const Matrix y = one_hot({0, 1, 2, 1, 0}, 3);
  for (Activation act : {Activation::Relu, Activation::Maxout}) {
    MlpReadout m = MlpReadout::initialize(4, 3, small_config(act));
    std::vector<DenseLayer> grad;
    m.loss(x, y, nullptr, &grad);
    const Vector analytic = MlpReadout(m.config(), grad).parameters();
    const Vector base = m.parameters();
    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < base.size(); ++k) {
      Vector p = base;
      p(k) += h;
      m.set_parameters(p);
      const double up = m.loss(x, y);
      p(k) -= 2 * h;
      m.set_parameters(p);
      const double down = m.loss(x, y);
      worst = std::max(worst, std::abs((up - down) / (2 * h) - analytic(k)));
    }
    m.set_parameters(base);
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("mlp: loss decreases when fitting a single sample") {
  MlpConfig c = small_config(Activation::Relu);
  Matrix x(2, 3);
  x << 1.0, -0.5, 0.2, -1.0, 0.4, 0.3;
  const MlpReadout m = fit_mlp(reps_of(x), {0, 1}, 2, c);
  REQUIRE(m.loss_history.size() == 50);
  CHECK(m.loss_history.back() < m.loss_history.front());
}

TEST_CASE("mlp: zero network predicts class 0") {
  MlpReadout m = MlpReadout::initialize(3, 4, small_config(Activation::Relu));
  m.set_parameters(Vector::Zero(m.parameters().size()));
  CHECK(predict_mlp(m, reps_of(testing::random_eigen(5, 3, 9))) == std::vector<int>(5, 0));
}

TEST_CASE("mlp: maxout with pieces (W, 2W) equals the dominant piece") {
  MlpConfig c = small_config(Activation::Maxout, 2);
  c.hidden = {3};
  MlpReadout m = MlpReadout::initialize(2, 2, c);
  auto layers = m.layers();
  // Positive inputs and weights make 2W x + 0 the winner everywhere.
  layers[0].weights.topRows(3) = testing::random_eigen(3, 2, 10).cwiseAbs();
  layers[0].weights.bottomRows(3) = 2.0 * layers[0].weights.topRows(3);
  layers[0].bias.setZero();
  const MlpReadout wide(c, layers);
  const Matrix x = testing::random_eigen(6, 2, 11).cwiseAbs();
  const Matrix hidden = x * layers[0].weights.bottomRows(3).transpose();
  const Matrix expected = (hidden * layers[1].weights.transpose()).rowwise() + layers[1].bias.transpose();
  CHECK(max_abs_diff(wide.logits(x), expected) <= 1e-12);
}

TEST_CASE("mlp: maxout with one piece is linear in each hidden unit") {
  MlpConfig c = small_config(Activation::Maxout, 1);
  c.hidden = {3};
  const MlpReadout m = MlpReadout::initialize(4, 2, c);
  const Matrix x = testing::random_eigen(7, 4, 12);
  const auto& l = m.layers();
  const Matrix hidden = (x * l[0].weights.transpose()).rowwise() + l[0].bias.transpose();
  const Matrix expected = (hidden * l[1].weights.transpose()).rowwise() + l[1].bias.transpose();
  CHECK(max_abs_diff(m.logits(x), expected) <= 1e-12);
}

TEST_CASE("mlp: dropout is off at inference") {
  MlpConfig c = small_config(Activation::Relu);
  c.dropout = 0.5;
  const MlpReadout m = MlpReadout::initialize(4, 3, c);
  const Matrix x = testing::random_eigen(5, 4, 13);
  CHECK(m.logits(x) == m.logits(x));
  MlpConfig plain = c;
  plain.dropout = 0.0;
  CHECK(m.logits(x) == MlpReadout(plain, m.layers()).logits(x));
}

TEST_CASE("mlp: loss grows with the l2 coefficient") {
  const Matrix x = testing::random_eigen(6, 4, 14);
  const Matrix y = one_hot({0, 1, 0, 1, 0, 1}, 2);
  double previous = -1.0;
  const MlpReadout base = MlpReadout::initialize(4, 2, small_config(Activation::Relu));
  for (double l2 : {0.0, 0.001, 0.1, 1.0}) {
    MlpConfig c = base.config();
    c.l2 = l2;
    const double value = MlpReadout(c, base.layers()).loss(x, y);
    CHECK(value >= previous);
    previous = value;
  }
}

TEST_CASE("mlp: training is deterministic and learns an easy problem") {
  Matrix x(20, 2);
  std::vector<int> labels;
  const Matrix noise = testing::random_eigen(20, 2, 15) * 0.2;
  for (int i = 0; i < 20; ++i) {
    const int c = i % 2;
    x.row(i) = noise.row(i) + Eigen::RowVector2d(c == 0 ? -1.0 : 1.0, c == 0 ? 1.0 : -1.0);
    labels.push_back(c);
  }
  MlpConfig c = small_config(Activation::Maxout);
  c.epochs = 300;
  c.dropout = 0.1;
  c.learning_rate = 0.01;
  const MlpReadout a = fit_mlp(reps_of(x), labels, 2, c);
  const MlpReadout b = fit_mlp(reps_of(x), labels, 2, c);
  CHECK(a.parameters() == b.parameters());
  CHECK(predict_mlp(a, reps_of(x)) == labels);
}

TEST_CASE("mlp: configuration errors") {
  MlpConfig c;
  c.hidden = {};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = MlpConfig{};
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = MlpConfig{};
  c.maxout_pieces = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK(parse_activation("maxout") == Activation::Maxout);
  CHECK_THROWS_AS(parse_activation("tanh"), InvalidArgument);
  const MlpReadout m = MlpReadout::initialize(3, 2, small_config(Activation::Relu));
  CHECK_THROWS_AS(m.logits(testing::random_eigen(2, 5, 1)), InvalidArgument);
}

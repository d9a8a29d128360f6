#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "lrpeeg/mlp.hpp"
#include "lrpeeg/rng.hpp"
#include "oracles.hpp"

using namespace lrpeeg;

namespace {

mlp::MlpModel hand_network() {
  mlp::MlpModel m;
  m.w1.resize(2, 2);
  m.w1 << 1, -1, 0.5, 2;
  m.b1 = (Vector(2) << 0.1, -0.2).finished();
  m.w2.resize(2, 2);
  m.w2 << 0.3, -0.4, -0.7, 0.9;
  m.b2 = (Vector(2) << 0.05, -0.05).finished();
  return m;
}

// Relative error max(|a|,|b|)-scaled; both tiny compares absolutely.
double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale < 1e-8 ? std::abs(a - b) : std::abs(a - b) / scale;
}

EpochSet toy_epochs(int n_per_class, Eigen::Index n_tp, Eigen::Index n_ch, double shift, Rng& rng) {
  EpochSet ep;
  ep.fs = 100;
  for (Eigen::Index c = 0; c < n_ch; ++c) ep.channel_names.push_back("c" + std::to_string(c));
  for (Eigen::Index t = 0; t < n_tp; ++t) ep.time_axis_ms.push_back(10.0 * static_cast<double>(t));
  for (int k = 0; k < 2 * n_per_class; ++k) {
    const int y = k % 2;
    Matrix m(n_tp, n_ch);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    m.col(0).array() += y == 1 ? shift : -shift;
    ep.trials.push_back(m);
    ep.labels.push_back(y);
  }
  return ep;
}

}  // namespace

TEST(Forward, HandComputedTwoByTwo) {
  const auto m = hand_network();
  const auto r = mlp::forward(m, (Vector(2) << 0.5, -0.5).finished());
  EXPECT_NEAR(r.hidden(0), 0.3363755443363322, 1e-14);
  EXPECT_NEAR(r.hidden(1), -0.935409070603099, 1e-14);
  EXPECT_NEAR(r.logits(0), 0.805699012723069, 1e-14);
  EXPECT_NEAR(r.logits(1), -1.026418381277322, 1e-14);
  EXPECT_NEAR(r.probs(0), 0.862013775537678, 1e-14);
  EXPECT_NEAR(r.probs(1), 0.13798622446232212, 1e-14);
  RowMatrix x(1, 2);
  x << 0.5, -0.5;
  const auto [loss, g] = mlp::loss_and_gradient(m, x, {1});
  EXPECT_NEAR(loss, 1.9806014215443497, 1e-13);
  EXPECT_NEAR(g.b2(0), 0.862013775537678, 1e-13);
  EXPECT_NEAR(g.b2(1), 0.13798622446232212 - 1.0, 1e-13);
}

TEST(Forward, MatchesScalarLoops) {
  Rng rng(1);
  const auto m = oracle::random_network(13, 7, 2, true);
  for (int rep = 0; rep < 5; ++rep) {
    const Vector x = oracle::random_vector(13, rng);
    const auto r = mlp::forward(m, x);
    const auto s = oracle::scalar_forward(m, oracle::to_std(x));
    for (Eigen::Index j = 0; j < 7; ++j) EXPECT_NEAR(r.hidden(j), s.hidden[static_cast<std::size_t>(j)], 1e-13);
    for (Eigen::Index k = 0; k < 2; ++k) EXPECT_NEAR(r.logits(k), s.logits[static_cast<std::size_t>(k)], 1e-13);
    EXPECT_NEAR(r.probs.sum(), 1.0, 1e-15);
  }
}

TEST(Forward, RejectsBadInput) {
  const auto m = hand_network();
  Vector x(2);
  x << 0.0, std::nan("");
  try {
    mlp::forward(m, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
  }
  EXPECT_THROW(mlp::forward(m, Vector::Zero(3)), Error);
}

TEST(Softmax, StableForLargeLogits) {
  const Vector p = mlp::softmax((Vector(2) << 1000.0, 999.0).finished());
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p(0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(3);
  auto m = oracle::random_network(9, 6, 4, true, 1.5);
  RowMatrix x(5, 9);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const std::vector<int> y = {0, 1, 1, 0, 1};
  const auto [loss, g] = mlp::loss_and_gradient(m, x, y);
  EXPECT_NEAR(loss, oracle::scalar_loss(m, x, y), 1e-12);

  const double h = 1e-6;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = oracle::scalar_loss(m, x, y);
    param = saved - h;
    const double down = oracle::scalar_loss(m, x, y);
    param = saved;
    worst = std::max(worst, rel_err((up - down) / (2.0 * h), analytic));
  };
  for (Eigen::Index i = 0; i < m.w1.rows(); ++i)
    for (Eigen::Index j = 0; j < m.w1.cols(); ++j) check(m.w1(i, j), g.w1(i, j));
  for (Eigen::Index j = 0; j < m.b1.size(); ++j) check(m.b1(j), g.b1(j));
  for (Eigen::Index i = 0; i < m.w2.rows(); ++i)
    for (Eigen::Index j = 0; j < 2; ++j) check(m.w2(i, j), g.w2(i, j));
  for (Eigen::Index j = 0; j < 2; ++j) check(m.b2(j), g.b2(j));
  EXPECT_LT(worst, 1e-6);
}

TEST(Init, UniformWithinFanInBoundAndZeroBias) {
  const auto m = mlp::init_model(400, 5, 50);
  EXPECT_LE(m.w1.cwiseAbs().maxCoeff(), 1.0 / 20.0);
  EXPECT_LE(m.w2.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(50.0));
  EXPECT_GT(m.w1.cwiseAbs().maxCoeff(), 0.9 / 20.0);
  EXPECT_NEAR(m.w1.mean(), 0.0, 0.002);
  EXPECT_TRUE(m.b1.isZero(0.0));
  EXPECT_TRUE(m.b2.isZero(0.0));
  EXPECT_EQ(m.n_hidden(), 50);
  EXPECT_EQ(mlp::init_model(3, 1).n_hidden(), 500);
}

TEST(Train, SeparableToyReachesPerfectAccuracy) {
  Rng rng(6);
  const auto ep = toy_epochs(30, 4, 3, 2.5, rng);
  mlp::TrainConfig cfg;
  cfg.seed = 11;
  const auto m = mlp::train(mlp::init_model(ep.n_features(), cfg.seed, 20), ep, cfg);
  const auto p = mlp::predict(m, ep);
  EXPECT_EQ(p.labels, ep.labels);
  EXPECT_EQ(m.iterations_trained, 3000);
}

TEST(Train, LossDecreases) {
  Rng rng(7);
  const auto ep = toy_epochs(20, 5, 2, 1.0, rng);
  const RowMatrix x = design_matrix(ep);
  auto m = mlp::init_model(ep.n_features(), 2, 10);
  const double before = oracle::scalar_loss(m, x, ep.labels);
  mlp::TrainConfig cfg;
  cfg.iterations = 500;
  m = mlp::train(std::move(m), ep, cfg);
  EXPECT_LT(oracle::scalar_loss(m, x, ep.labels), 0.5 * before);
}

TEST(Train, DeterministicPerSeed) {
  Rng rng(8);
  const auto ep = toy_epochs(10, 3, 2, 1.0, rng);
  mlp::TrainConfig cfg;
  cfg.iterations = 200;
  cfg.seed = 42;
  const auto a = mlp::train(mlp::init_model(ep.n_features(), 42, 8), ep, cfg);
  const auto b = mlp::train(mlp::init_model(ep.n_features(), 42, 8), ep, cfg);
  EXPECT_TRUE(a.w1 == b.w1 && a.w2 == b.w2 && a.b1 == b.b1 && a.b2 == b.b2);
  cfg.seed = 43;
  const auto c = mlp::train(mlp::init_model(ep.n_features(), 42, 8), ep, cfg);
  EXPECT_FALSE(a.w1 == c.w1);
}

TEST(Train, ZeroIterationsIsIdentity) {
  Rng rng(9);
  const auto ep = toy_epochs(3, 2, 2, 1.0, rng);
  mlp::TrainConfig cfg;
  cfg.iterations = 0;
  const auto init = mlp::init_model(ep.n_features(), 1, 4);
  const auto m = mlp::train(init, ep, cfg);
  EXPECT_TRUE(m.w1 == init.w1);
}

TEST(Train, InvalidConfigsRejected) {
  Rng rng(10);
  const auto ep = toy_epochs(3, 2, 2, 1.0, rng);
  const auto init = mlp::init_model(ep.n_features(), 1, 4);
  mlp::TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(mlp::train(init, ep, cfg), Error);
  cfg = {};
  cfg.learning_rate = -1;
  EXPECT_THROW(mlp::train(init, ep, cfg), Error);
  EXPECT_THROW(mlp::train(mlp::init_model(5, 1, 4), ep, {}), Error);
  EXPECT_THROW(mlp::train(init, subset(ep, {}), {}), Error);
}

TEST(Transfer, OneSubjectMatchesPlainTraining) {
  Rng rng(11);
  const auto ep = toy_epochs(8, 3, 2, 1.0, rng);
  mlp::TrainConfig cfg;
  cfg.iterations = 150;
  cfg.seed = 5;
  const auto t = mlp::train_transfer({ep}, cfg, 2, 6);
  const auto plain = mlp::train(mlp::init_model(ep.n_features(), 5, 6), ep, cfg);
  ASSERT_EQ(t.models.size(), 2u);
  for (const auto& m : t.models) EXPECT_TRUE(m.w1 == plain.w1 && m.w2 == plain.w2);
}

TEST(Transfer, IdenticalSubjectsGiveIdenticalOrders) {
  Rng rng(12);
  const auto ep = toy_epochs(5, 3, 2, 1.0, rng);
  mlp::TrainConfig cfg;
  cfg.iterations = 50;
  const auto t = mlp::train_transfer({ep, ep, ep, ep}, cfg, 5, 4);
  ASSERT_EQ(t.orders.size(), 5u);
  for (const auto& order : t.orders) {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<std::size_t>{0, 1, 2, 3}));
  }
  for (const auto& m : t.models) EXPECT_TRUE(m.w1 == t.models[0].w1);
  EXPECT_EQ(t.models[0].iterations_trained, 200);
  // the five orders are not all the same permutation
  bool differs = false;
  for (const auto& o : t.orders) differs |= o != t.orders[0];
  EXPECT_TRUE(differs);
}

TEST(Transfer, FeatureMismatchRejected) {
  Rng rng(13);
  const auto a = toy_epochs(3, 3, 2, 1.0, rng);
  const auto b = toy_epochs(3, 4, 2, 1.0, rng);
  EXPECT_THROW(mlp::train_transfer({a, b}, {}, 1, 4), Error);
  EXPECT_THROW(mlp::train_transfer({}, {}, 1, 4), Error);
}

TEST(Predict, ExactTieGoesToClassZero) {
  mlp::MlpModel m;
  m.w1 = Matrix::Ones(3, 2);
  m.b1 = Vector::Zero(2);
  m.w2 = Matrix::Zero(2, 2);
  m.b2 = Vector::Zero(2);
  RowMatrix x = RowMatrix::Ones(2, 3);
  const auto p = mlp::predict_design(m, x);
  EXPECT_EQ(p.labels, (std::vector<int>{0, 0}));
  EXPECT_DOUBLE_EQ(p.scores[0], 0.5);
}

TEST(Predict, AgreesWithForward) {
  Rng rng(14);
  const auto m = oracle::random_network(6, 5, 3, true, 2.0);
  RowMatrix x(20, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const auto p = mlp::predict_design(m, x);
  for (Eigen::Index i = 0; i < 20; ++i) {
    const auto r = mlp::forward(m, x.row(i).transpose());
    EXPECT_NEAR(p.scores[static_cast<std::size_t>(i)], r.probs(1), 1e-14);
    EXPECT_EQ(p.labels[static_cast<std::size_t>(i)], r.probs(1) > r.probs(0) ? 1 : 0);
  }
}

TEST(Serialization, BitExactRoundTrip) {
  auto m = oracle::random_network(11, 7, 5, true);
  m.rng_seed = 0xfedcba9876543210ULL;
  m.iterations_trained = 1234;
  m.meta["note"] = "x";
  const auto bytes = mlp::encode_model(m);
  const auto back = mlp::decode_model(bytes);
  EXPECT_TRUE(back.w1 == m.w1 && back.b1 == m.b1 && back.w2 == m.w2 && back.b2 == m.b2);
  EXPECT_EQ(back.rng_seed, m.rng_seed);
  EXPECT_EQ(back.iterations_trained, 1234);
  EXPECT_EQ(back.meta["note"], "x");
  EXPECT_EQ(mlp::encode_model(back), bytes);

  const auto path = std::filesystem::temp_directory_path() / "lrpeeg_test_model.bin";
  mlp::write_model(m, path);
  EXPECT_TRUE(mlp::read_model(path).w1 == m.w1);
}

TEST(Serialization, CorruptFilesRejected) {
  const auto bytes = mlp::encode_model(oracle::random_network(3, 2, 1, false));
  try {
    mlp::decode_model(bytes.substr(0, bytes.size() - 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::truncation);
  }
  EXPECT_THROW(mlp::decode_model(bytes + "x"), Error);
  EXPECT_THROW(mlp::decode_model("{\"format\":\"other\"}\n"), Error);
}

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace heartml;
using namespace heartml::testing;

namespace {

RNNParams random_params(SplitMix64& rng, std::size_t hidden, double scale) {
  RNNParams p(hidden, 1);
  for (auto& w : p.flat()) w = rng.uniform(-scale, scale);
  return p;
}

Sequence random_sequence(SplitMix64& rng, std::size_t steps) {
  std::vector<double> x(steps);
  for (auto& v : x) v = rng.normal();
  return as_sequence(x);
}

FeatureMatrix two_cluster_matrix(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    y.push_back(static_cast<int>(i % 2));
    for (int c = 0; c < 4; ++c) v.push_back(rng.normal(y.back() ? 0.8 : -0.8, 1.0));
  }
  return matrix_of(4, v, y);
}

}  // namespace

TEST(Sequence, OneScalarPerFeature) {
  const std::array<double, 3> x{0.5, -1.0, 2.0};
  const auto s = as_sequence(x);
  ASSERT_EQ(s.steps(), 3u);
  EXPECT_EQ(s.step(0)[0], 0.5);
  EXPECT_EQ(s.step(1)[0], -1.0);
  EXPECT_EQ(s.step(2)[0], 2.0);
  EXPECT_EQ(as_sequence(std::span<const double>{}).steps(), 0u);
  EXPECT_EQ(error_kind_of([] { forward(RNNParams(2, 1), Sequence{}); }), ErrorKind::EmptySequence);
  EXPECT_EQ(error_kind_of([] { forward(RNNParams(2, 1), Sequence{2, {1, 2}}); }), ErrorKind::DimensionMismatch);
}

TEST(Forward, ClosedFormCases) {
  const std::array<double, 3> x{0.5, -1.0, 2.0};
  RNNParams p(4, 1);
  EXPECT_EQ(forward(p, as_sequence(x)).probability, 0.5);
  p.b_y() = std::log(3.0);
  EXPECT_NEAR(forward(p, as_sequence(x)).probability, 0.75, 1e-15);
}

TEST(Forward, MatchesHandUnrolledThreeSteps) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(rng, 2, 1.0);
    const double x1 = rng.normal(), x2 = rng.normal(), x3 = rng.normal();
    const auto wxh = p.w_xh(), whh = p.w_hh(), why = p.w_hy(), bh = p.b_h();
    // h_t[j] = tanh(wxh[j] x_t + whh[j][0] h[0] + whh[j][1] h[1] + bh[j])
    const double a1 = std::tanh(wxh[0] * x1 + bh[0]);
    const double b1 = std::tanh(wxh[1] * x1 + bh[1]);
    const double a2 = std::tanh(wxh[0] * x2 + whh[0] * a1 + whh[1] * b1 + bh[0]);
    const double b2 = std::tanh(wxh[1] * x2 + whh[2] * a1 + whh[3] * b1 + bh[1]);
    const double a3 = std::tanh(wxh[0] * x3 + whh[0] * a2 + whh[1] * b2 + bh[0]);
    const double b3 = std::tanh(wxh[1] * x3 + whh[2] * a2 + whh[3] * b2 + bh[1]);
    const double prob = 1.0 / (1.0 + std::exp(-(why[0] * a3 + why[1] * b3 + p.b_y())));
    const std::array<double, 3> x{x1, x2, x3};
    const auto fw = forward(p, as_sequence(x));
    EXPECT_NEAR(fw.probability, prob, 1e-14);
    EXPECT_NEAR(fw.hidden[2], a2, 1e-14);
    EXPECT_NEAR(fw.hidden[5], b3, 1e-14);
  }
}

TEST(Forward, HiddenStatesBounded) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_params(rng, 5, 2.0);
    const auto fw = forward(p, random_sequence(rng, 11));
    for (double h : fw.hidden) {
      ASSERT_GT(h, -1.0);
      ASSERT_LT(h, 1.0);
    }
    EXPECT_GT(fw.probability, 0.0);
    EXPECT_LT(fw.probability, 1.0);
  }
}

TEST(Bce, Values) {
  EXPECT_NEAR(bce(0.5, 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce(0.5, 1), 0.69315, 1e-5);
  EXPECT_NEAR(bce(0.75, 1), 0.28768, 1e-5);
  EXPECT_LE(bce(1.0, 1), -std::log(1.0 - 1e-12) + 1e-18);
  EXPECT_GE(bce(1.0, 1), 0.0);
  EXPECT_TRUE(std::isfinite(bce(0.0, 1)));
  EXPECT_TRUE(std::isfinite(bce(1.0, 0)));
}

TEST(Backward, AnalyticAndStructuralZeros) {
  const std::array<double, 4> x{0.3, -0.2, 1.0, 0.4};
  const auto g = backward(RNNParams(3, 1), as_sequence(x), 1);
  EXPECT_EQ(g.b_y(), -0.5);

  SplitMix64 rng(7);
  const auto p = random_params(rng, 3, 0.5);
  const std::array<double, 1> one{0.8};
  const auto g1 = backward(p, as_sequence(one), 0);
  for (double v : g1.w_hh()) EXPECT_EQ(v, 0.0);
}

TEST(GradCheck, ZeroParams) {
  SplitMix64 rng(1);
  EXPECT_LT(grad_check(RNNParams(4, 1), random_sequence(rng, 11), 1, 1e-5), 1e-6);
}

TEST(GradCheck, RandomInstances) {
  SplitMix64 rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_params(rng, 4, 0.5);
    worst = std::max(worst, grad_check(p, random_sequence(rng, 11), static_cast<int>(rng.below(2)), 1e-5));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(GradCheck, LargeStepIsWorse) {
  SplitMix64 rng(3);
  const auto p = random_params(rng, 4, 0.8);
  const auto s = random_sequence(rng, 11);
  EXPECT_GT(grad_check(p, s, 1, 1e-1), grad_check(p, s, 1, 1e-5));
  EXPECT_EQ(error_kind_of([&] { grad_check(p, s, 1, 0.0); }), ErrorKind::BadArgument);
}

TEST(RmsProp, Arithmetic) {
  RNNTrainConfig cfg;
  RNNParams params(1, 1), cache(1, 1), grads(1, 1);
  for (auto& g : grads.flat()) g = 1.0;
  rmsprop_step(params, cache, grads, cfg);
  for (std::size_t i = 0; i < params.flat().size(); ++i) {
    EXPECT_NEAR(cache.flat()[i], 0.1, 1e-15);
    EXPECT_NEAR(params.flat()[i], -0.0031623, 1e-7);
  }
  rmsprop_step(params, cache, grads, cfg);
  for (double c : cache.flat()) EXPECT_NEAR(c, 0.19, 1e-15);

  RNNParams zero(1, 1);
  const auto before = params;
  rmsprop_step(params, cache, zero, cfg);
  EXPECT_EQ(params, before);
  for (double c : cache.flat()) EXPECT_NEAR(c, 0.9 * 0.19, 1e-15);
}

TEST(EarlyStop, PolicyTrace) {
  EarlyStopping s(2);
  const std::array<double, 4> losses{0.50, 0.40, 0.45, 0.46};
  unsigned stopped = 0;
  for (double l : losses) {
    s.observe(l);
    if (s.should_stop()) {
      stopped = s.epoch();
      break;
    }
  }
  EXPECT_EQ(stopped, 4u);
  EXPECT_EQ(s.best_epoch(), 2u);

  EarlyStopping tiny(1);
  tiny.observe(1.0);
  EXPECT_FALSE(tiny.observe(1.0 - 1e-7));
  EXPECT_TRUE(tiny.should_stop());
}

TEST(TrainRnn, StopsAtMaxEpochsWhenStillImproving) {
  const auto train = two_cluster_matrix(60, 1);
  const auto val = two_cluster_matrix(20, 2);
  RNNTrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.patience = 5;
  cfg.hidden_size = 4;
  cfg.learning_rate = 0.003;
  const auto r = train_rnn(train, val, cfg);
  EXPECT_EQ(r.history.stopped_epoch, 5u);
  EXPECT_EQ(r.history.epochs.size(), 5u);
  for (std::size_t e = 1; e < 5; ++e) {
    ASSERT_LT(r.history.epochs[e].val_loss, r.history.epochs[e - 1].val_loss);
  }
  EXPECT_EQ(r.history.best_epoch, 5u);
}

TEST(TrainRnn, DeterministicAndRestoresBestEpoch) {
  const auto train = two_cluster_matrix(80, 3);
  const auto val = two_cluster_matrix(30, 4);
  RNNTrainConfig cfg;
  cfg.max_epochs = 60;
  cfg.patience = 3;
  cfg.hidden_size = 6;
  cfg.learning_rate = 0.02;
  cfg.seed = 9;
  const auto a = train_rnn(train, val, cfg);
  const auto b = train_rnn(train, val, cfg);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.params, b.params);

  const auto& h = a.history;
  ASSERT_GE(h.best_epoch, 1u);
  EXPECT_LE(h.best_epoch, h.stopped_epoch);
  const double best = h.epochs[h.best_epoch - 1].val_loss;
  for (const auto& e : h.epochs) EXPECT_GE(e.val_loss, best);
  EXPECT_EQ(mean_loss(a.params, val), best);

  cfg.seed = 10;
  EXPECT_NE(train_rnn(train, val, cfg).history, a.history);
}

TEST(TrainRnn, Errors) {
  const auto m = two_cluster_matrix(10, 1);
  EXPECT_EQ(error_kind_of([&] { train_rnn(m, FeatureMatrix{}, RNNTrainConfig{}); }), ErrorKind::EmptyPartition);
  RNNTrainConfig cfg;
  cfg.patience = 0;
  EXPECT_EQ(error_kind_of([&] { train_rnn(m, m, cfg); }), ErrorKind::BadHyperparameter);
  cfg = {};
  cfg.learning_rate = 0.0;
  EXPECT_EQ(error_kind_of([&] { train_rnn(m, m, cfg); }), ErrorKind::BadHyperparameter);
}

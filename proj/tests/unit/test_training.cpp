#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "simstc/error.hpp"
#include "simstc/training.hpp"

namespace simstc {
namespace {

std::vector<NamedParameter> one_parameter(double value) {
  return {{"theta", Tensor::parameter(Matrix(1, 1, value))}};
}

TEST(Adam, FirstStepExample) {
  auto params = one_parameter(0.0);
  backward(sum(params[0].tensor));  // gradient 1
  AdamState state;
  adam_step(params, state, 0.001);
  EXPECT_NEAR(params[0].tensor.value()(0, 0), -0.000999999990, 1e-15);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, DescendsQuadratic) {
  auto params = one_parameter(1.0);
  AdamState state;
  double previous = 1.0;
  for (int i = 0; i < 100; ++i) {
    const Tensor& t = params[0].tensor;
    backward(matmul(t, t));
    adam_step(params, state, 0.01);
    const double now = params[0].tensor.value()(0, 0) * params[0].tensor.value()(0, 0);
    EXPECT_LT(now, previous);
    previous = now;
  }
}

TEST(Adam, ZeroGradientAndZeroRate) {
  auto params = one_parameter(0.75);
  AdamState state;
  adam_step(params, state, 0.01);  // gradient still zero
  EXPECT_EQ(params[0].tensor.value()(0, 0), 0.75);

  backward(scale(sum(params[0].tensor), 3.0));
  adam_step(params, state, 0.0);
  EXPECT_EQ(params[0].tensor.value()(0, 0), 0.75);
}

TEST(Adam, NonFiniteGradientThrowsWithoutUpdating) {
  std::vector<NamedParameter> params = {{"a", Tensor::parameter(Matrix(1, 1, 1.0))},
                                        {"b", Tensor::parameter(Matrix(1, 1, 1e300))}};
  backward(add(sum(params[0].tensor), scale(sum(matmul(params[1].tensor, params[1].tensor)), 1e300)));
  AdamState state;
  EXPECT_THROW(adam_step(params, state, 0.1), Error);
  EXPECT_EQ(params[0].tensor.value()(0, 0), 1.0);
  EXPECT_EQ(state.step, 0u);
}

TEST(Scores, Examples) {
  const std::vector<std::uint32_t> truth = {0, 1, 2, 1};
  auto all = score_predictions(truth, truth, 3);
  EXPECT_EQ(all.accuracy, 1.0);
  EXPECT_EQ(all.macro_f1, 1.0);
  EXPECT_EQ(all.correct, 4u);

  const std::vector<std::uint32_t> zeros = {0, 0, 0, 0};
  const std::vector<std::uint32_t> binary = {0, 1, 0, 1};
  auto r = score_predictions(zeros, binary, 2);
  EXPECT_EQ(r.accuracy, 0.5);
  EXPECT_NEAR(r.macro_f1, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(r.per_class[1].f1, 0.0);
  EXPECT_EQ(r.per_class[0].support, 2u);
  EXPECT_EQ(r.per_class[0].predicted, 4u);
}

TEST(Scores, OrderIndependent) {
  std::vector<std::uint32_t> pred = {0, 2, 1, 1, 0, 2, 2};
  std::vector<std::uint32_t> truth = {0, 1, 1, 2, 0, 2, 1};
  const auto a = score_predictions(pred, truth, 3);
  std::vector<std::size_t> order = {6, 3, 0, 5, 1, 4, 2};
  std::vector<std::uint32_t> p2, t2;
  for (auto i : order) {
    p2.push_back(pred[i]);
    t2.push_back(truth[i]);
  }
  const auto b = score_predictions(p2, t2, 3);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.macro_f1, b.macro_f1);
}

TEST(Scores, InvalidInputs) {
  const std::vector<std::uint32_t> a = {0, 1}, b = {0};
  EXPECT_THROW(score_predictions(a, b, 2), Error);
}

TrainConfig small_config() {
  TrainConfig c;
  c.model.hidden_dim = 8;
  c.model.proj_dim = 8;
  c.learning_rate = 0.01;
  c.max_epochs = 60;
  return c;
}

double monitored(const EpochRecord& r, EarlyStopMetric m) {
  return m == EarlyStopMetric::kValCe ? r.val_ce : r.val_total;
}

void check_early_stopping(const TrainResult& result, const TrainConfig& config) {
  ASSERT_FALSE(result.epochs.empty());
  double best = std::numeric_limits<double>::infinity();
  double significant = best;
  std::size_t since = 0, last_reset = 0;
  for (const auto& e : result.epochs) {
    const double v = monitored(e, config.early_stop_metric);
    best = std::min(best, v);
    if (v < significant - config.min_improvement) {
      significant = v;
      since = 0;
      last_reset = e.epoch;
    } else {
      ++since;
    }
  }
  EXPECT_EQ(result.best_val_loss, best);
  EXPECT_EQ(monitored(result.epochs[result.best_epoch - 1], config.early_stop_metric), best);
  if (result.early_stopped) {
    EXPECT_EQ(since, config.patience);
    EXPECT_EQ(result.epochs.size(), last_reset + config.patience);
  } else {
    EXPECT_EQ(result.epochs.size(), config.max_epochs);
  }
  for (std::size_t i = 0; i < result.epochs.size(); ++i) EXPECT_EQ(result.epochs[i].epoch, i + 1);
}

TEST(Train, PatienceOneStopsAtFirstPlateau) {
  const auto bundle = testing::six_doc_bundle();
  auto config = small_config();
  config.patience = 1;
  config.learning_rate = 0.5;  // large steps overshoot quickly
  config.max_epochs = 200;
  const auto result = train(bundle, config);
  EXPECT_TRUE(result.early_stopped);
  check_early_stopping(result, config);
}

TEST(Train, EarlyStoppingBookkeeping) {
  const auto bundle = testing::six_doc_bundle();
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    auto config = small_config();
    config.seed = seed;
    config.patience = 3;
    config.max_epochs = 150;
    config.early_stop_metric = seed == 2 ? EarlyStopMetric::kValTotal : EarlyStopMetric::kValCe;
    check_early_stopping(train(bundle, config), config);
  }
}

TEST(Train, SnapshotIsTheBestEpoch) {
  const auto bundle = testing::six_doc_bundle();
  auto config = small_config();
  config.max_epochs = 40;
  config.patience = 40;
  std::vector<EpochRecord> seen;
  const auto result = train(bundle, config, [&](const EpochRecord& r) { seen.push_back(r); });
  ASSERT_EQ(seen.size(), result.epochs.size());
  const auto report = compute_losses(result.model, bundle, config, Split::kVal);
  EXPECT_NEAR(report.l_ce, result.best_val_loss, 1e-12);
}

TEST(Train, Deterministic) {
  const auto bundle = testing::six_doc_bundle();
  const auto config = small_config();
  const auto a = train(bundle, config), b = train(bundle, config);
  ASSERT_EQ(a.epochs.size(), b.epochs.size());
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    EXPECT_EQ(to_json(a.epochs[i], false), to_json(b.epochs[i], false));
  }
  const auto pa = a.model.parameters(), pb = b.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i].tensor.value().data, pb[i].tensor.value().data);
}

TEST(Train, MiIdentityPerEpoch) {
  const auto bundle = testing::six_doc_bundle();
  const auto result = train(bundle, small_config());
  for (const auto& e : result.epochs) {
    EXPECT_NEAR(e.train.mi_lower_bound + e.train.l_cl, 3.0 * std::log(6.0), 1e-12);
    EXPECT_NEAR(e.train.l_total, e.train.l_ce + e.train.l_cl, 1e-12);
  }
}

TEST(Train, NoPairsMeansZeroContrastiveLoss) {
  const auto bundle = testing::six_doc_bundle();
  auto config = small_config();
  config.contrastive.pairs = PairSet::none();
  config.max_epochs = 5;
  for (const auto& e : train(bundle, config).epochs) {
    EXPECT_EQ(e.train.l_cl, 0.0);
    EXPECT_EQ(e.train.l_total, e.train.l_ce);
  }
}

TEST(Config, JsonRoundTripAndValidation) {
  TrainConfig c = small_config();
  c.contrastive.pairs = PairSet::parse("we");
  c.contrastive.tau = 0.25;
  c.ce_reduction = Reduction::kSum;
  c.early_stop_metric = EarlyStopMetric::kValTotal;
  c.model.per_view_projection = true;
  const auto j = to_json(c);
  EXPECT_EQ(to_json(train_config_from_json(j)), j);

  TrainConfig bad;
  bad.patience = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = {};
  bad.learning_rate = -1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad.learning_rate = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = {};
  bad.contrastive.tau = 0.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Ablation, GridOrder) {
  const auto grid = ablation_grid();
  ASSERT_EQ(grid.size(), 8u);
  const std::vector<std::string> expected = {"", "wp", "pe", "we", "wp,pe", "wp,we", "pe,we", "wp,pe,we"};
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(grid[i].to_string(), expected[i]);
}

TEST(Ablation, ThreadCountDoesNotChangeResults) {
  const auto bundle = testing::six_doc_bundle();
  auto config = small_config();
  config.max_epochs = 10;
  const std::vector<std::uint64_t> seeds = {0, 1};
  const auto one = run_ablation(bundle, config, seeds, 1);
  const auto three = run_ablation(bundle, config, seeds, 3);
  ASSERT_EQ(one.size(), 8u);
  for (std::size_t r = 0; r < one.size(); ++r) {
    EXPECT_EQ(one[r].pairs, three[r].pairs);
    ASSERT_EQ(one[r].runs.size(), 2u);
    for (std::size_t s = 0; s < 2; ++s) {
      EXPECT_EQ(one[r].runs[s].seed, seeds[s]);
      EXPECT_EQ(one[r].runs[s].accuracy, three[r].runs[s].accuracy);
      EXPECT_EQ(one[r].runs[s].macro_f1, three[r].runs[s].macro_f1);
    }
    const double mean = (one[r].runs[0].accuracy + one[r].runs[1].accuracy) / 2.0;
    EXPECT_NEAR(one[r].mean_accuracy, mean, 1e-15);
    EXPECT_NEAR(one[r].std_accuracy, std::abs(one[r].runs[0].accuracy - mean), 1e-15);
  }
}

}  // namespace
}  // namespace simstc

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "slimtrain/trainer.hpp"

using namespace slimtrain;
using Eigen::MatrixXd;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.batch_size = 5;
  c.memory_depth = 3;
  c.epochs = 2;
  c.seed = 4;
  c.net.width = 4;
  c.net.depth = 3;
  c.net.final_time = 2.0;
  return c;
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig c = small_config();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.lambda0 = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

// Frozen network, full memory, one epoch of Lambda_k = lambda / batches.
TEST(Train, FrozenThetaOneEpochIsTikhonov) {
  auto data = make_peaks_dataset(100, -3, 3, Sampling::Grid, 0);
  TrainConfig c = small_config();
  c.learning_rate = 0.0;
  c.memory_depth = 20;
  c.epochs = 1;
  c.lambda0 = 1e-2;
  c.mode = TrainMode::SlimTrainFixedLambda;
  c.fixed_scaling = FixedLambdaScaling::PerEpoch;
  auto r = train(c, data, data);
  ASSERT_EQ(r.iterations.size(), 20u);
  EXPECT_NEAR(r.iterations.back().lambda_sum, 1e-2, 1e-15);
  MatrixXd W_hat = empirical_optimal_W(r.final_model.theta, data, 1e-2,
                                       LambdaScaling::Sum);
  EXPECT_LE((r.final_model.W - W_hat).norm() / W_hat.norm(), 1e-10);
}

TEST(Train, PerIterationFixedLambda) {
  auto data = make_peaks_dataset(100, -3, 3, Sampling::Uniform, 1);
  TrainConfig c = small_config();
  c.mode = TrainMode::SlimTrainFixedLambda;
  c.fixed_scaling = FixedLambdaScaling::PerIteration;
  c.lambda0 = 0.25;
  auto r = train(c, data, data);
  for (const auto& it : r.iterations) EXPECT_EQ(it.lambda_k, 0.25);
  EXPECT_TRUE(r.sgcv.empty());
}

TEST(Train, CoupledModeHasNoSolveRecords) {
  auto data = make_peaks_dataset(100, -3, 3, Sampling::Uniform, 1);
  TrainConfig c = small_config();
  c.mode = TrainMode::CoupledAdam;
  auto r = train(c, data, data);
  EXPECT_TRUE(r.sgcv.empty());
  ASSERT_FALSE(r.iterations.empty());
  for (const auto& it : r.iterations) {
    EXPECT_TRUE(std::isnan(it.lambda_k));
    EXPECT_TRUE(std::isnan(it.lambda_sum));
  }
}

TEST(Train, SgcvRecordsAndFeasibility) {
  auto data = make_peaks_dataset(200, -3, 3, Sampling::Uniform, 2);
  TrainConfig c = small_config();
  auto r = train(c, data, data);
  ASSERT_EQ(r.iterations.size(), 80u);
  EXPECT_EQ(r.iterations.front().lambda_k, c.lambda0);
  EXPECT_EQ(r.sgcv.size(), 79u);
  for (const auto& it : r.iterations) EXPECT_GT(it.lambda_sum, 0.0);
  for (std::size_t i = 1; i < r.iterations.size(); ++i)
    EXPECT_NEAR(r.iterations[i].lambda_sum,
                r.iterations[i - 1].lambda_sum + r.iterations[i].lambda_k,
                1e-12 * r.iterations[i].lambda_sum);
}

TEST(Train, Reproducible) {
  auto data = make_peaks_dataset(100, -3, 3, Sampling::Uniform, 3);
  TrainConfig c = small_config();
  auto a = train(c, data, data);
  auto b = train(c, data, data);
  ASSERT_EQ(a.iterations.size(), b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    EXPECT_EQ(a.iterations[i].lambda_k, b.iterations[i].lambda_k);
    EXPECT_EQ(a.iterations[i].batch_loss, b.iterations[i].batch_loss);
  }
  EXPECT_EQ(a.final_model.W, b.final_model.W);
}

TEST(Train, BestModelTracksValidationMinimum) {
  auto data = make_peaks_dataset(200, -3, 3, Sampling::Uniform, 4);
  auto [tr, va] = split_validation(data, 0.1, 1);
  TrainConfig c = small_config();
  c.epochs = 4;
  auto r = train(c, tr, va);
  ASSERT_EQ(r.epochs.size(), 4u);
  double best = r.epochs[0].val_loss;
  for (const auto& e : r.epochs) best = std::min(best, e.val_loss);
  EXPECT_EQ(r.best_val_loss, best);
  EXPECT_NEAR(data_fit_loss(r.best_model, va), best, 1e-12 * best);
}

TEST(EmpiricalOptimalW, ScalingConventionsAgree) {
  auto data = make_peaks_dataset(50, -3, 3, Sampling::Uniform, 5);
  auto theta = init_params<double>(4, 2, 2, 1.0, 1);
  MatrixXd a = empirical_optimal_W(theta, data, 1e-3, LambdaScaling::SampleMean);
  MatrixXd b = empirical_optimal_W(theta, data, 50 * 1e-3, LambdaScaling::Sum);
  EXPECT_LE((a - b).norm() / b.norm(), 1e-12);
}

TEST(VarPro, FullGradientVanishesBatchesDoNot) {
  auto data = make_peaks_dataset(100, -3, 3, Sampling::Uniform, 6);
  auto theta = init_params<double>(4, 2, 2, 1.0, 2);
  auto v = varpro_bias_check(theta, data, 1e-3, 10);
  EXPECT_LE(v.full_gradient_rel, 1e-8);
  EXPECT_LE(v.batch_mean_rel, 1e-8);
  ASSERT_EQ(v.batch_rel.size(), 10u);
  for (double b : v.batch_rel) EXPECT_GT(b, 1e-3);
}

// The reference peaks configuration, 50 epochs.
TEST(Train, PeaksReferenceRun) {
  auto data = make_peaks_dataset(2000, -3, 3, Sampling::Uniform, 1);
  auto [tr, va] = split_validation(data, 0.1, derive_seed(1, 77));
  TrainConfig c;
  c.batch_size = 5;
  c.memory_depth = 10;
  c.learning_rate = 1e-3;
  c.lambda0 = 1e-3;
  c.epochs = 50;
  c.seed = 1;
  auto r = train(c, tr, va);
  ASSERT_EQ(r.epochs.size(), 50u);
  int increases = 0;
  for (std::size_t e = 5; e < r.epochs.size(); ++e)
    if (r.epochs[e].train_loss > r.epochs[e - 1].train_loss) ++increases;
  EXPECT_EQ(increases, 0);
  const double err = peaks_relative_error(r.best_model, 100, -3, 3);
  std::cout << "peaks relative error " << err << '\n';
  EXPECT_LE(err, 0.2);
}

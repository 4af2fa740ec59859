#pragma once

// slimTrain: the nonlinear weights theta follow a first-order optimizer while
// the final linear layer W is recomputed every iteration by slimTik with an
// sGCV-selected regularization increment. The fully coupled ADAM baseline
// and a fixed-Lambda variant share the same loop.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "slimtrain/data.hpp"
#include "slimtrain/resnet.hpp"
#include "slimtrain/sgcv.hpp"

namespace slimtrain {

enum class TrainMode { SlimTrain, CoupledAdam, SlimTrainFixedLambda };
enum class OptimizerKind { Sgd, Adam };

// Fixed mode: PerEpoch uses Lambda_k = lambda0 / batches_per_epoch so one
// epoch accumulates lambda0; PerIteration uses Lambda_k = lambda0.
enum class FixedLambdaScaling { PerEpoch, PerIteration };

struct NetworkConfig {
  Eigen::Index width = 8;
  Eigen::Index depth = 8;
  double final_time = 5.0;
};

struct TrainConfig {
  Eigen::Index batch_size = 5;
  std::size_t memory_depth = 0;
  // 0 freezes theta (linear-only training on fixed features).
  double learning_rate = 1e-3;
  double alpha = 0.0;
  // Initial Lambda (slimTrain), the constant Lambda (fixed mode) or the
  // Tikhonov weight on W (coupled mode).
  double lambda0 = 1e-3;
  int epochs = 1;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  TrainMode mode = TrainMode::SlimTrain;
  FixedLambdaScaling fixed_scaling = FixedLambdaScaling::PerEpoch;
  SgcvConfig sgcv;
  NetworkConfig net;
  // Wall-clock timing makes the iteration log non-reproducible; off by default.
  bool record_wallclock = false;

  void validate() const;
};

struct IterationRecord {
  int epoch = 0;
  long iteration = 0;  // global, 1-based
  double lambda_k = std::numeric_limits<double>::quiet_NaN();
  double lambda_sum = std::numeric_limits<double>::quiet_NaN();
  double batch_loss = 0.0;
  double grad_norm_theta = 0.0;
  double wallclock_ms = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
};

struct SgcvRecord {
  int epoch = 0;
  long iteration = 0;
  double lambda_k = 0.0;
  double grid_argmin = 0.0;
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  double value = 0.0;
  bool fallback = false;
};

struct Model {
  ResNetParamsd theta;
  Eigen::MatrixXd W;  // n_target x (width + 1)
};

struct TrainResult {
  Model final_model;
  Model best_model;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<IterationRecord> iterations;
  std::vector<EpochRecord> epochs;
  std::vector<SgcvRecord> sgcv;
  std::vector<std::string> warnings;
  bool diverged = false;
  std::string failure;
};

/// Network outputs W [F(Y); 1].
Eigen::MatrixXd predict(const Model& model, const Eigen::MatrixXd& inputs);

/// (1/b) sum 1/2 ||W F(y_i) - c_i||^2 + alpha/2 ||theta||^2 + lambda/2 ||W||_F^2
double batch_objective(const Eigen::MatrixXd& W, const ResNetParamsd& theta,
                       const Eigen::MatrixXd& inputs,
                       const Eigen::MatrixXd& targets, double alpha,
                       double lambda);

/// Mean data-fit term 1/2 ||W F(y) - c||^2 over the dataset.
double data_fit_loss(const Model& model, const Dataset& data);

/// ||prediction - peaks|| / ||peaks|| on an n x n lattice of [lo, hi]^2.
double peaks_relative_error(const Model& model, Eigen::Index n, double lo,
                            double hi);

TrainResult train(const TrainConfig& config, const Dataset& train_set,
                  const Dataset& validation);

/// SampleMean: expectations are sample means, so the shift on sum F F^T is
/// N * lambda. Sum: plain ridge on the stacked data with shift lambda.
enum class LambdaScaling { SampleMean, Sum };

/// Closed-form minimizer of the Tikhonov-regularized linear least-squares
/// loss over the whole dataset for fixed theta, built from moment matrices.
Eigen::MatrixXd empirical_optimal_W(
    const ResNetParamsd& theta, const Dataset& data, double lambda,
    LambdaScaling scaling = LambdaScaling::SampleMean);

struct VarProBias {
  double full_gradient_rel = 0.0;  // ||D_W Phi(W_hat)|| / ||W_hat||
  double batch_mean_rel = 0.0;     // ||mean_k D_W Phi_k - D_W Phi|| / ||W_hat||
  std::vector<double> batch_rel;   // ||D_W Phi_k(W_hat)|| / ||W_hat||
};

/// Gradient in W of the full-data objective at its optimum, and of each
/// disjoint contiguous batch objective at the same point.
VarProBias varpro_bias_check(const ResNetParamsd& theta, const Dataset& data,
                             double lambda, Eigen::Index batch_size);

}  // namespace slimtrain

#include "slimtrain/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "slimtrain/optimizers.hpp"
#include "slimtrain/stik.hpp"

namespace slimtrain {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be >= 0");
  }
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (mode != TrainMode::CoupledAdam && !(lambda0 > 0.0)) {
    throw std::invalid_argument("lambda0 must be positive");
  }
  if (mode == TrainMode::CoupledAdam && !(lambda0 >= 0.0)) {
    throw std::invalid_argument("lambda0 must be >= 0 in coupled mode");
  }
  if (net.width < 1 || net.depth < 0 || !(net.final_time > 0.0)) {
    throw std::invalid_argument("network: width >= 1, depth >= 0, T > 0");
  }
  sgcv.validate();
}

MatrixXd predict(const Model& model, const MatrixXd& inputs) {
  const auto tape = resnet_forward(model.theta, inputs);
  return model.W * augment_features(tape.output());
}

double batch_objective(const MatrixXd& W, const ResNetParamsd& theta,
                       const MatrixXd& inputs, const MatrixXd& targets,
                       double alpha, double lambda) {
  const auto tape = resnet_forward(theta, inputs);
  const MatrixXd residual = W * augment_features(tape.output()) - targets;
  return 0.5 * residual.squaredNorm() / static_cast<double>(inputs.cols()) +
         0.5 * alpha * flatten(theta).squaredNorm() +
         0.5 * lambda * W.squaredNorm();
}

double data_fit_loss(const Model& model, const Dataset& data) {
  if (data.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  return 0.5 * (predict(model, data.inputs) - data.targets).squaredNorm() /
         static_cast<double>(data.size());
}

double peaks_relative_error(const Model& model, Eigen::Index n, double lo,
                            double hi) {
  const Dataset grid = make_peaks_dataset(n * n, lo, hi, Sampling::Grid, 0);
  return (predict(model, grid.inputs) - grid.targets).norm() /
         grid.targets.norm();
}

namespace {

MatrixXd init_linear_weights(Eigen::Index n_target, Eigen::Index n_feat,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double bound = std::sqrt(1.0 / static_cast<double>(n_feat));
  std::uniform_real_distribution<double> dist(-bound, bound);
  MatrixXd W(n_target, n_feat);
  for (Eigen::Index j = 0; j < n_feat; ++j) {
    for (Eigen::Index i = 0; i < n_target; ++i) W(i, j) = dist(rng);
  }
  return W;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - since)
      .count();
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& train_set,
                  const Dataset& validation) {
  config.validate();
  if (train_set.size() < config.batch_size) {
    throw std::invalid_argument("train: dataset smaller than one batch");
  }
  if (validation.size() > 0 && (validation.n_in() != train_set.n_in() ||
                                validation.n_target() != train_set.n_target())) {
    throw std::invalid_argument("train: validation set has other dimensions");
  }

  const bool linear_solve = config.mode != TrainMode::CoupledAdam;
  const Eigen::Index n_feat = config.net.width + 1;

  Model model;
  model.theta = init_params<double>(config.net.width, config.net.depth,
                                    train_set.n_in(), config.net.final_time,
                                    derive_seed(config.seed, 0));
  model.W = init_linear_weights(train_set.n_target(), n_feat,
                                derive_seed(config.seed, 1));
  VectorXd theta = flatten(model.theta);
  AdamState<double> adam;

  MemoryBuffer memory(config.memory_depth);
  RegHistory history;

  TrainResult result;
  result.best_model = model;
  long k = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches =
        shuffle_partition(train_set.size(), config.batch_size,
                          derive_seed(config.seed, 1000 + epoch));
    for (const auto& idx : batches) {
      ++k;
      const auto start = std::chrono::steady_clock::now();
      const MatrixXd Y = train_set.inputs(Eigen::all, idx);
      const MatrixXd C = train_set.targets(Eigen::all, idx);
      const auto tape = resnet_forward(model.theta, Y);

      IterationRecord rec;
      rec.epoch = epoch;
      rec.iteration = k;

      if (linear_solve) {
        FeatureBatch current = make_feature_batch(tape.output(), C, k - 1);
        const SlimTikSystem system(model.W, memory, current, history);
        double lambda = config.lambda0;
        if (config.mode == TrainMode::SlimTrainFixedLambda &&
            config.fixed_scaling == FixedLambdaScaling::PerEpoch) {
          lambda /= static_cast<double>(batches.size());
        }
        if (config.mode == TrainMode::SlimTrain && !history.empty()) {
          const auto sel = sgcv_select(config.sgcv, system);
          SgcvRecord srec;
          srec.epoch = epoch;
          srec.iteration = k;
          if (sel) {
            lambda = sel->lambda;
            srec.grid_argmin = sel->grid_argmin;
            srec.grid_lo = sel->grid.front().first;
            srec.grid_hi = sel->grid.back().first;
            srec.value = sel->value;
          } else {
            const double prev = history.params().back();
            const double sum = history.running_sum();
            const double floor =
                -sum + 1e-12 * std::max(1.0, std::abs(sum));
            lambda = std::max(prev, floor);
            srec.fallback = true;
            srec.value = std::numeric_limits<double>::quiet_NaN();
            result.warnings.push_back("iteration " + std::to_string(k) +
                                      ": no feasible sGCV candidate");
          }
          srec.lambda_k = lambda;
          result.sgcv.push_back(srec);
        }
        model.W = system.solve(lambda);
        history.push(lambda);
        memory.push(std::move(current));
        rec.lambda_k = lambda;
        rec.lambda_sum = history.running_sum();
      }

      const MatrixXd residual =
          model.W * augment_features(tape.output()) - C;
      rec.batch_loss =
          0.5 * residual.squaredNorm() / static_cast<double>(idx.size());
      const VectorXd grad =
          grad_theta(model.theta, tape, model.W, C, config.alpha);
      rec.grad_norm_theta = grad.norm();

      if (!std::isfinite(rec.batch_loss) || !model.W.allFinite() ||
          !grad.allFinite()) {
        result.diverged = true;
        result.failure = "non-finite loss at iteration " + std::to_string(k);
        result.iterations.push_back(rec);
        result.final_model = model;
        return result;
      }

      if (config.learning_rate > 0.0) {
        if (linear_solve) {
          if (config.optimizer == OptimizerKind::Adam) {
            adam_step(adam, theta, grad, config.learning_rate);
          } else {
            theta += config.learning_rate * sgd_direction(grad);
          }
        } else {
          const MatrixXd grad_W = linear_weight_gradient(
              model.W, augment_features(tape.output()), C, config.lambda0);
          if (config.optimizer == OptimizerKind::Adam) {
            coupled_baseline_step(adam, theta, model.W, grad, grad_W,
                                  config.learning_rate);
          } else {
            theta += config.learning_rate * sgd_direction(grad);
            model.W -= config.learning_rate * grad_W;
          }
        }
        model.theta = unflatten(model.theta, theta);
      }
      rec.wallclock_ms = config.record_wallclock ? elapsed_ms(start) : 0.0;
      result.iterations.push_back(rec);
    }

    EpochRecord erec;
    erec.epoch = epoch;
    erec.train_loss = data_fit_loss(model, train_set);
    erec.val_loss = data_fit_loss(model, validation);
    result.epochs.push_back(erec);
    if (!std::isfinite(erec.train_loss)) {
      result.diverged = true;
      result.failure = "non-finite training loss in epoch " +
                       std::to_string(epoch);
      break;
    }
    const double score =
        validation.size() > 0 ? erec.val_loss : erec.train_loss;
    if (score < result.best_val_loss) {
      result.best_val_loss = score;
      result.best_epoch = epoch;
      result.best_model = model;
    }
  }
  result.final_model = model;
  return result;
}

MatrixXd empirical_optimal_W(const ResNetParamsd& theta, const Dataset& data,
                             double lambda, LambdaScaling scaling) {
  if (!(lambda >= 0.0)) {
    throw std::invalid_argument("empirical_optimal_W: lambda must be >= 0");
  }
  const auto tape = resnet_forward(theta, data.inputs);
  const MatrixXd Z = augment_features(tape.output());
  const double n = static_cast<double>(data.size());
  const double scale = scaling == LambdaScaling::SampleMean ? 1.0 / n : 1.0;
  // second moment E[F F^T] and cross moment E[c F^T]
  const MatrixXd G = scale * (Z * Z.transpose()) +
                     lambda * MatrixXd::Identity(Z.rows(), Z.rows());
  const MatrixXd cross = scale * (data.targets * Z.transpose());
  if (lambda == 0.0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(G, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    if (!(ev(0) > 1e-14 * ev(ev.size() - 1))) {
      throw std::invalid_argument(
          "empirical_optimal_W: singular second-moment matrix with lambda = 0");
    }
  }
  return G.ldlt().solve(cross.transpose()).transpose();
}

VarProBias varpro_bias_check(const ResNetParamsd& theta, const Dataset& data,
                             double lambda, Eigen::Index batch_size) {
  if (batch_size < 1 || batch_size > data.size()) {
    throw std::invalid_argument("varpro_bias_check: bad batch size");
  }
  const MatrixXd W = empirical_optimal_W(theta, data, lambda);
  const auto tape = resnet_forward(theta, data.inputs);
  const MatrixXd Z = augment_features(tape.output());
  const double w_norm = W.norm();

  VarProBias out;
  const MatrixXd full = linear_weight_gradient(W, Z, data.targets, lambda);
  out.full_gradient_rel = full.norm() / w_norm;

  const Eigen::Index count = data.size() / batch_size;
  MatrixXd mean = MatrixXd::Zero(W.rows(), W.cols());
  for (Eigen::Index k = 0; k < count; ++k) {
    const MatrixXd g = linear_weight_gradient<double>(
        W, Z.middleCols(k * batch_size, batch_size),
        data.targets.middleCols(k * batch_size, batch_size), lambda);
    out.batch_rel.push_back(g.norm() / w_norm);
    mean += g;
  }
  mean /= static_cast<double>(count);
  out.batch_mean_rel = (mean - full).norm() / w_norm;
  return out;
}

}  // namespace slimtrain

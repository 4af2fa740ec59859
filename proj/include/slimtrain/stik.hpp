#pragma once

// Sampled (limited-memory) Tikhonov updates for the final linear layer.
//
// Conventions: Z is n_feat x batch with a trailing row of ones, C is
// n_target x batch and W is n_target x n_feat. vec(W) stacks columns, so the
// vectorized operator of a batch is A = Z^T kron I_{n_target}. The Kronecker
// structure decouples into n_target row problems that share the stacked
// matrix S = [Z_{k-r}^T; ...; Z_{k-1}^T; Z_k^T].

#include <Eigen/Dense>

#include <cstddef>
#include <deque>
#include <vector>

#include "slimtrain/ridge.hpp"

namespace slimtrain {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct FeatureBatch {
  MatrixXd features;  // n_feat x batch, last row all ones
  MatrixXd targets;   // n_target x batch
  long theta_stamp = 0;

  Eigen::Index size() const { return features.cols(); }
  Eigen::Index feature_rows() const { return features.rows(); }
};

/// Appends the bias row to raw network outputs.
FeatureBatch make_feature_batch(const MatrixXd& states, MatrixXd targets,
                                long theta_stamp);

/// FIFO of at most `capacity` stale feature blocks, oldest first. Blocks keep
/// the features they were created with.
class MemoryBuffer {
 public:
  explicit MemoryBuffer(std::size_t capacity = 0) : capacity_(capacity) {}

  void push(FeatureBatch batch);
  void clear() { blocks_.clear(); }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  const std::deque<FeatureBatch>& blocks() const { return blocks_; }
  Eigen::Index total_samples() const;

 private:
  std::size_t capacity_;
  std::deque<FeatureBatch> blocks_;
};

/// Accepted regularization increments and their running sum.
class RegHistory {
 public:
  void push(double lambda);
  const std::vector<double>& params() const { return params_; }
  double running_sum() const { return sum_; }
  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }
  bool feasible(double lambda) const { return lambda + sum_ > 0.0; }

 private:
  std::vector<double> params_;
  double sum_ = 0.0;
};

inline VectorXd vec(const MatrixXd& W) { return W.reshaped(); }
inline MatrixXd mat(const VectorXd& w, Eigen::Index rows, Eigen::Index cols) {
  return w.reshaped(rows, cols);
}

/// The stacked least-squares system of one slimTik iteration, factorized
/// once so that w_k(Lambda) can be evaluated for many candidate Lambda.
class SlimTikSystem {
 public:
  SlimTikSystem(const MatrixXd& W_prev, const MemoryBuffer& memory,
                const FeatureBatch& current, const RegHistory& history);

  /// mat(w_k(lambda)); requires lambda + history_sum() > 0.
  MatrixXd solve(double lambda) const;

  /// ||W Z_k - C_k||_F^2 on the current batch.
  double current_residual_sq(const MatrixXd& W) const;

  const RidgeFactors<double>& factors() const { return factors_; }
  const FeatureBatch& current() const { return current_; }
  const MatrixXd& previous() const { return W_prev_; }
  double history_sum() const { return history_sum_; }
  Eigen::Index stacked_rows() const { return factors_.rows(); }

 private:
  RidgeFactors<double> factors_;
  MatrixXd rhs_;     // stacked right-hand sides, one column per target
  MatrixXd W_prev_;  // n_target x n_feat
  FeatureBatch current_;
  double history_sum_;
};

/// W_k for candidate `lambda`: memory rows carry Z_i^T W_prev^T, the current
/// rows carry C_k^T, shift lambda + sum(history).
MatrixXd slimtik_step(const MatrixXd& W_prev, const MemoryBuffer& memory,
                      const FeatureBatch& current, const RegHistory& history,
                      double lambda);

/// Full-memory reference in update form, w_k = w_{k-1} - B_k g_k, assembled
/// with explicit Kronecker operators and dense normal equations.
/// `all_blocks` holds batches 1..k (the last is the current one).
VectorXd stik_update_form(const VectorXd& w_prev,
                          const std::vector<FeatureBatch>& all_blocks,
                          const RegHistory& history, double lambda);

}  // namespace slimtrain

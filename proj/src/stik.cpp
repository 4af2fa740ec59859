#include "slimtrain/stik.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace slimtrain {

FeatureBatch make_feature_batch(const MatrixXd& states, MatrixXd targets,
                                long theta_stamp) {
  if (states.cols() != targets.cols()) {
    throw std::invalid_argument("feature batch: sample counts differ");
  }
  FeatureBatch b;
  b.features.resize(states.rows() + 1, states.cols());
  b.features.topRows(states.rows()) = states;
  b.features.row(states.rows()).setOnes();
  b.targets = std::move(targets);
  b.theta_stamp = theta_stamp;
  return b;
}

void MemoryBuffer::push(FeatureBatch batch) {
  if (!blocks_.empty() &&
      (batch.feature_rows() != blocks_.front().feature_rows() ||
       batch.targets.rows() != blocks_.front().targets.rows())) {
    throw std::invalid_argument("memory: block dimensions changed");
  }
  if (capacity_ == 0) return;
  if (blocks_.size() == capacity_) blocks_.pop_front();
  blocks_.push_back(std::move(batch));
}

Eigen::Index MemoryBuffer::total_samples() const {
  Eigen::Index n = 0;
  for (const auto& b : blocks_) n += b.size();
  return n;
}

void RegHistory::push(double lambda) {
  if (!std::isfinite(lambda) || !feasible(lambda)) {
    throw std::invalid_argument("history: infeasible regularization parameter");
  }
  params_.push_back(lambda);
  sum_ += lambda;
}

namespace {

void check_batch(const FeatureBatch& b, const char* who) {
  if (b.features.cols() != b.targets.cols() || b.features.rows() < 1 ||
      b.features.cols() < 1) {
    throw std::invalid_argument(std::string(who) + ": malformed batch");
  }
}

}  // namespace

SlimTikSystem::SlimTikSystem(const MatrixXd& W_prev, const MemoryBuffer& memory,
                             const FeatureBatch& current,
                             const RegHistory& history)
    : W_prev_(W_prev), current_(current),
      history_sum_(history.running_sum()) {
  check_batch(current, "slimtik");
  const Eigen::Index n_feat = current.feature_rows();
  const Eigen::Index n_target = current.targets.rows();
  if (W_prev.rows() != n_target || W_prev.cols() != n_feat) {
    throw std::invalid_argument("slimtik: W_prev has wrong shape");
  }
  for (const auto& block : memory.blocks()) {
    if (block.feature_rows() != n_feat) {
      throw std::invalid_argument(
          "slimtik: feature width changed across theta stamps");
    }
  }
  const Eigen::Index rows = memory.total_samples() + current.size();
  MatrixXd S(rows, n_feat);
  rhs_.resize(rows, n_target);
  Eigen::Index pos = 0;
  const MatrixXd Wt = W_prev.transpose();
  for (const auto& block : memory.blocks()) {
    S.middleRows(pos, block.size()) = block.features.transpose();
    rhs_.middleRows(pos, block.size()) = block.features.transpose() * Wt;
    pos += block.size();
  }
  S.bottomRows(current.size()) = current.features.transpose();
  rhs_.bottomRows(current.size()) = current.targets.transpose();
  factors_ = factorize(S);
}

MatrixXd SlimTikSystem::solve(double lambda) const {
  const double shift = lambda + history_sum_;
  if (!(shift > 0.0)) {
    throw std::invalid_argument(
        "slimtik: lambda + sum of previous lambdas must be positive");
  }
  MatrixXd X = ridge_solve(factors_, rhs_, shift);
  if (history_sum_ != 0.0) {
    X += history_sum_ *
         shifted_inverse_apply(factors_, W_prev_.transpose(), shift);
  }
  return X.transpose();
}

double SlimTikSystem::current_residual_sq(const MatrixXd& W) const {
  return (W * current_.features - current_.targets).squaredNorm();
}

MatrixXd slimtik_step(const MatrixXd& W_prev, const MemoryBuffer& memory,
                      const FeatureBatch& current, const RegHistory& history,
                      double lambda) {
  if (!history.feasible(lambda)) {
    throw std::invalid_argument(
        "slimtik: lambda + sum of previous lambdas must be positive");
  }
  return SlimTikSystem(W_prev, memory, current, history).solve(lambda);
}

VectorXd stik_update_form(const VectorXd& w_prev,
                          const std::vector<FeatureBatch>& all_blocks,
                          const RegHistory& history, double lambda) {
  if (all_blocks.empty()) {
    throw std::invalid_argument("stik_update_form: no batches");
  }
  if (!history.feasible(lambda)) {
    throw std::invalid_argument(
        "stik_update_form: lambda + sum of previous lambdas must be positive");
  }
  const FeatureBatch& current = all_blocks.back();
  const Eigen::Index n_feat = current.feature_rows();
  const Eigen::Index n_target = current.targets.rows();
  const Eigen::Index n = n_feat * n_target;
  if (w_prev.size() != n) {
    throw std::invalid_argument("stik_update_form: w_prev has wrong size");
  }
  const MatrixXd I_t = MatrixXd::Identity(n_target, n_target);
  auto kron_operator = [&](const MatrixXd& Z) {
    // A = Z^T kron I_t
    const MatrixXd Zt = Z.transpose();
    MatrixXd A = MatrixXd::Zero(Zt.rows() * n_target, n);
    for (Eigen::Index i = 0; i < Zt.rows(); ++i) {
      for (Eigen::Index j = 0; j < Zt.cols(); ++j) {
        A.block(i * n_target, j * n_target, n_target, n_target) = Zt(i, j) * I_t;
      }
    }
    return A;
  };

  MatrixXd H = (lambda + history.running_sum()) * MatrixXd::Identity(n, n);
  MatrixXd A_k;
  for (const auto& block : all_blocks) {
    check_batch(block, "stik_update_form");
    if (block.feature_rows() != n_feat) {
      throw std::invalid_argument(
          "stik_update_form: feature width changed across theta stamps");
    }
    MatrixXd A = kron_operator(block.features);
    H += A.transpose() * A;
    A_k = std::move(A);
  }
  const VectorXd b_k = current.targets.reshaped();
  const VectorXd g = A_k.transpose() * (A_k * w_prev - b_k) + lambda * w_prev;
  return w_prev - H.ldlt().solve(g);
}

}  // namespace slimtrain

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "slimtrain/ridge.hpp"

namespace slimtrain {

template <typename Scalar>
struct AdamState {
  Vector<Scalar> m;
  Vector<Scalar> v;
  long t = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  AdamState() = default;
  explicit AdamState(Eigen::Index n)
      : m(Vector<Scalar>::Zero(n)), v(Vector<Scalar>::Zero(n)) {}
};

template <typename Derived>
auto sgd_direction(const Eigen::MatrixBase<Derived>& grad) {
  return (-grad).eval();
}

/// One bias-corrected ADAM step, theta <- theta - lr * mhat / (sqrt(vhat) + eps).
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, Vector<Scalar>& theta,
               const Vector<Scalar>& grad, Scalar lr) {
  if (!(lr > Scalar(0))) {
    throw std::invalid_argument("adam_step: learning rate must be positive");
  }
  if (state.m.size() == 0) {
    state.m = Vector<Scalar>::Zero(theta.size());
    state.v = Vector<Scalar>::Zero(theta.size());
  }
  if (grad.size() != theta.size() || state.m.size() != theta.size()) {
    throw std::invalid_argument("adam_step: size mismatch");
  }
  ++state.t;
  state.m = state.beta1 * state.m + (Scalar(1) - state.beta1) * grad;
  state.v = state.beta2 * state.v +
            (Scalar(1) - state.beta2) * grad.cwiseProduct(grad);
  const Scalar c1 =
      Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.t));
  const Scalar c2 =
      Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.t));
  theta.array() -= lr * (state.m.array() / c1) /
                   ((state.v.array() / c2).sqrt() + state.eps);
}

/// Gradient of (1/b) sum 1/2 ||W z_i - c_i||^2 + lambda/2 ||W||_F^2 in W.
template <typename Scalar>
Matrix<Scalar> linear_weight_gradient(const Matrix<Scalar>& W,
                                      const Matrix<Scalar>& Z,
                                      const Matrix<Scalar>& C, Scalar lambda) {
  if (W.cols() != Z.rows() || C.rows() != W.rows() || C.cols() != Z.cols()) {
    throw std::invalid_argument("linear_weight_gradient: dimensions");
  }
  return (W * Z - C) * Z.transpose() / Scalar(Z.cols()) + lambda * W;
}

/// Fully coupled baseline: one ADAM step on [theta; vec(W)].
template <typename Scalar>
void coupled_baseline_step(AdamState<Scalar>& state, Vector<Scalar>& theta,
                           Matrix<Scalar>& W, const Vector<Scalar>& grad_theta,
                           const Matrix<Scalar>& grad_W, Scalar lr) {
  if (grad_theta.size() != theta.size() || grad_W.rows() != W.rows() ||
      grad_W.cols() != W.cols()) {
    throw std::invalid_argument("coupled_baseline_step: size mismatch");
  }
  const Eigen::Index n = theta.size();
  Vector<Scalar> joint(n + W.size());
  joint << theta, W.reshaped();
  Vector<Scalar> g(n + W.size());
  g << grad_theta, grad_W.reshaped();
  adam_step(state, joint, g, lr);
  theta = joint.head(n);
  W = joint.tail(W.size()).reshaped(W.rows(), W.cols());
}

}  // namespace slimtrain

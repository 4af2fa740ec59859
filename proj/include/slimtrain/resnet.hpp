#pragma once

// tanh residual network feature extractor:
//   u_0     = tanh(K_in y + b_in)
//   u_{j+1} = u_j + h tanh(K_j u_j + b_j),  j = 0..d-1
// Batches are stored column-wise (one sample per column).

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "slimtrain/ridge.hpp"

namespace slimtrain {

template <typename Scalar>
struct ResNetParams {
  Matrix<Scalar> K_in;  // width x n_in
  Vector<Scalar> b_in;  // width
  std::vector<Matrix<Scalar>> K;  // d of width x width
  std::vector<Vector<Scalar>> b;  // d of width
  Scalar step_h = Scalar(1);

  Eigen::Index width() const { return K_in.rows(); }
  Eigen::Index n_in() const { return K_in.cols(); }
  Eigen::Index depth() const { return static_cast<Eigen::Index>(K.size()); }

  /// w*n_in + w + d*(w^2 + w)
  Eigen::Index size() const {
    const Eigen::Index w = width();
    return w * n_in() + w + depth() * (w * w + w);
  }

  bool all_finite() const {
    if (!K_in.allFinite() || !b_in.allFinite() || !std::isfinite(step_h)) {
      return false;
    }
    for (Eigen::Index j = 0; j < depth(); ++j) {
      if (!K[j].allFinite() || !b[j].allFinite()) return false;
    }
    return true;
  }
};

using ResNetParamsd = ResNetParams<double>;

/// Cached forward states for backpropagation.
template <typename Scalar>
struct ForwardTape {
  Matrix<Scalar> inputs;                    // n_in x batch
  std::vector<Matrix<Scalar>> states;       // u_0..u_d, width x batch
  std::vector<Matrix<Scalar>> activations;  // tanh(K_j u_j + b_j), j < d

  Eigen::Index layers() const {
    return static_cast<Eigen::Index>(states.size());
  }
  const Matrix<Scalar>& output() const { return states.back(); }
};

template <typename Scalar>
ResNetParams<Scalar> make_params_shape(Eigen::Index width, Eigen::Index depth,
                                       Eigen::Index n_in, Scalar final_time) {
  if (width < 1 || n_in < 1 || depth < 0) {
    throw std::invalid_argument("resnet: width, n_in >= 1 and depth >= 0");
  }
  ResNetParams<Scalar> p;
  p.K_in = Matrix<Scalar>::Zero(width, n_in);
  p.b_in = Vector<Scalar>::Zero(width);
  p.K.assign(depth, Matrix<Scalar>::Zero(width, width));
  p.b.assign(depth, Vector<Scalar>::Zero(width));
  p.step_h = depth > 0 ? final_time / Scalar(depth) : final_time;
  return p;
}

/// Weights i.i.d. uniform on +-sqrt(1/fan_in); biases zero.
template <typename Scalar>
ResNetParams<Scalar> init_params(Eigen::Index width, Eigen::Index depth,
                                 Eigen::Index n_in, Scalar final_time,
                                 std::uint64_t seed) {
  ResNetParams<Scalar> p = make_params_shape(width, depth, n_in, final_time);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Matrix<Scalar>& K) {
    const double bound = std::sqrt(1.0 / static_cast<double>(K.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      for (Eigen::Index j = 0; j < K.cols(); ++j) {
        K(i, j) = static_cast<Scalar>(dist(rng));
      }
    }
  };
  fill(p.K_in);
  for (auto& K : p.K) fill(K);
  return p;
}

/// Flat layout: K_in row-major, b_in, then per layer K_j row-major, b_j.
template <typename Scalar>
Vector<Scalar> flatten(const ResNetParams<Scalar>& p) {
  using RowMajor =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Vector<Scalar> out(p.size());
  Eigen::Index pos = 0;
  auto put_matrix = [&](const Matrix<Scalar>& K) {
    Eigen::Map<RowMajor>(out.data() + pos, K.rows(), K.cols()) = K;
    pos += K.size();
  };
  auto put_vector = [&](const Vector<Scalar>& v) {
    out.segment(pos, v.size()) = v;
    pos += v.size();
  };
  put_matrix(p.K_in);
  put_vector(p.b_in);
  for (Eigen::Index j = 0; j < p.depth(); ++j) {
    put_matrix(p.K[j]);
    put_vector(p.b[j]);
  }
  return out;
}

/// Inverse of flatten; `shape` supplies dimensions and step size.
template <typename Scalar, typename Derived>
ResNetParams<Scalar> unflatten(const ResNetParams<Scalar>& shape,
                               const Eigen::MatrixBase<Derived>& flat) {
  using RowMajor =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  if (flat.size() != shape.size()) {
    throw std::invalid_argument("unflatten: size mismatch");
  }
  const Vector<Scalar> v = flat;
  ResNetParams<Scalar> p = shape;
  Eigen::Index pos = 0;
  auto get_matrix = [&](Matrix<Scalar>& K) {
    K = Eigen::Map<const RowMajor>(v.data() + pos, K.rows(), K.cols());
    pos += K.size();
  };
  auto get_vector = [&](Vector<Scalar>& b) {
    b = v.segment(pos, b.size());
    pos += b.size();
  };
  get_matrix(p.K_in);
  get_vector(p.b_in);
  for (Eigen::Index j = 0; j < p.depth(); ++j) {
    get_matrix(p.K[j]);
    get_vector(p.b[j]);
  }
  return p;
}

template <typename Scalar, typename Derived>
ForwardTape<Scalar> resnet_forward(const ResNetParams<Scalar>& p,
                                   const Eigen::MatrixBase<Derived>& Y) {
  if (Y.rows() != p.n_in()) {
    throw std::invalid_argument("resnet_forward: input rows != n_in");
  }
  if (!p.all_finite()) {
    throw std::invalid_argument("resnet_forward: non-finite parameters");
  }
  ForwardTape<Scalar> tape;
  tape.inputs = Y;
  tape.states.reserve(p.depth() + 1);
  tape.activations.reserve(p.depth());
  Matrix<Scalar> u =
      ((p.K_in * tape.inputs).colwise() + p.b_in).array().tanh().matrix();
  tape.states.push_back(u);
  for (Eigen::Index j = 0; j < p.depth(); ++j) {
    Matrix<Scalar> a =
        ((p.K[j] * u).colwise() + p.b[j]).array().tanh().matrix();
    u += p.step_h * a;
    tape.activations.push_back(std::move(a));
    tape.states.push_back(u);
  }
  return tape;
}

/// Backpropagates dL/du_d (width x batch) through the tape and returns the
/// parameter gradient in flatten() order.
template <typename Scalar, typename Derived>
Vector<Scalar> resnet_backward(const ResNetParams<Scalar>& p,
                               const ForwardTape<Scalar>& tape,
                               const Eigen::MatrixBase<Derived>& output_grad) {
  if (tape.layers() != p.depth() + 1 ||
      static_cast<Eigen::Index>(tape.activations.size()) != p.depth() ||
      tape.inputs.rows() != p.n_in() || tape.output().rows() != p.width() ||
      output_grad.rows() != p.width() ||
      output_grad.cols() != tape.output().cols()) {
    throw std::invalid_argument("resnet_backward: tape does not match params");
  }
  ResNetParams<Scalar> g = p;
  Matrix<Scalar> delta = output_grad;
  for (Eigen::Index j = p.depth() - 1; j >= 0; --j) {
    const Matrix<Scalar> pre =
        (p.step_h * delta.array() *
         (Scalar(1) - tape.activations[j].array().square()))
            .matrix();
    g.K[j] = pre * tape.states[j].transpose();
    g.b[j] = pre.rowwise().sum();
    delta += p.K[j].transpose() * pre;
  }
  const Matrix<Scalar> pre_in =
      (delta.array() * (Scalar(1) - tape.states[0].array().square())).matrix();
  g.K_in = pre_in * tape.inputs.transpose();
  g.b_in = pre_in.rowwise().sum();
  return flatten(g);
}

/// Bias-augmented features [u_d; 1].
template <typename Scalar>
Matrix<Scalar> augment_features(const Matrix<Scalar>& states) {
  Matrix<Scalar> Z(states.rows() + 1, states.cols());
  Z.topRows(states.rows()) = states;
  Z.row(states.rows()).setOnes();
  return Z;
}

/// Gradient of the mini-batch objective
///   (1/b) sum_i 1/2 ||W [F(y_i); 1] - c_i||^2 + alpha/2 ||theta||^2
/// with respect to theta, in flatten() order. The bias column of W does not
/// feed back into the network.
template <typename Scalar>
Vector<Scalar> grad_theta(const ResNetParams<Scalar>& p,
                          const ForwardTape<Scalar>& tape,
                          const Matrix<Scalar>& W,
                          const Matrix<Scalar>& targets, Scalar alpha) {
  const Eigen::Index w = p.width();
  const Eigen::Index batch = tape.output().cols();
  if (W.cols() != w + 1 || targets.rows() != W.rows() ||
      targets.cols() != batch) {
    throw std::invalid_argument("grad_theta: W/target dimensions");
  }
  const Matrix<Scalar> residual =
      W * augment_features(tape.output()) - targets;
  const Matrix<Scalar> out_grad =
      (W.leftCols(w).transpose() * residual) / Scalar(batch);
  Vector<Scalar> grad = resnet_backward(p, tape, out_grad);
  if (alpha != Scalar(0)) grad += alpha * flatten(p);
  return grad;
}

}  // namespace slimtrain

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "slimtrain/stik.hpp"
#include "test_util.hpp"

using namespace slimtrain;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Vectorized stacked system solved by QR:
//   [A_mem; A_k; sqrt(s) I] w ~ [A_mem w_prev; b_k; (sum/sqrt(s)) w_prev]
VectorXd dense_stacked_solve(const MatrixXd& W_prev,
                             const std::vector<FeatureBatch>& memory,
                             const FeatureBatch& cur, double sum,
                             double lambda) {
  const Eigen::Index nt = W_prev.rows();
  const Eigen::Index n = W_prev.size();
  const double s = lambda + sum;
  std::vector<MatrixXd> blocks;
  std::vector<VectorXd> rhs;
  const VectorXd wp = vec(W_prev);
  for (const auto& m : memory) {
    MatrixXd A = testutil::kron_operator(m.features, nt);
    rhs.push_back(A * wp);
    blocks.push_back(std::move(A));
  }
  blocks.push_back(testutil::kron_operator(cur.features, nt));
  rhs.push_back(vec(cur.targets));
  blocks.push_back(std::sqrt(s) * MatrixXd::Identity(n, n));
  rhs.push_back(sum / std::sqrt(s) * wp);
  Eigen::Index rows = 0;
  for (const auto& b : blocks) rows += b.rows();
  MatrixXd A(rows, n);
  VectorXd b(rows);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    A.middleRows(at, blocks[i].rows()) = blocks[i];
    b.segment(at, rhs[i].size()) = rhs[i];
    at += blocks[i].rows();
  }
  return A.householderQr().solve(b);
}

MemoryBuffer full_memory(const std::vector<FeatureBatch>& blocks) {
  MemoryBuffer m(blocks.size() + 1);
  for (const auto& b : blocks) m.push(b);
  return m;
}

}  // namespace

TEST(VecMat, RoundTripAndColumnOrder) {
  MatrixXd W(2, 3);
  W << 1, 2, 3, 4, 5, 6;
  VectorXd w = vec(W);
  EXPECT_EQ(w(0), 1);
  EXPECT_EQ(w(1), 4);
  EXPECT_EQ(w(2), 2);
  EXPECT_EQ(mat(w, 2, 3), W);
}

TEST(FeatureBatch, BiasRow) {
  std::mt19937_64 rng(1);
  auto b = testutil::random_batch(4, 2, 5, rng);
  EXPECT_EQ(b.features.rows(), 4);
  EXPECT_EQ(b.features.row(3), Eigen::RowVectorXd::Ones(5));
}

TEST(MemoryBuffer, ZeroCapacityStaysEmpty) {
  std::mt19937_64 rng(2);
  MemoryBuffer m(0);
  m.push(testutil::random_batch(3, 1, 2, rng));
  EXPECT_TRUE(m.empty());
}

TEST(MemoryBuffer, FifoEviction) {
  std::mt19937_64 rng(2);
  MemoryBuffer m(2);
  for (long k = 1; k <= 3; ++k) m.push(testutil::random_batch(3, 1, 2, rng, k));
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.blocks()[0].theta_stamp, 2);
  EXPECT_EQ(m.blocks()[1].theta_stamp, 3);
  EXPECT_EQ(m.total_samples(), 4);
}

TEST(MemoryBuffer, StampsIncrease) {
  std::mt19937_64 rng(4);
  MemoryBuffer m(10);
  for (long k = 0; k < 5; ++k) m.push(testutil::random_batch(3, 1, 2, rng, k));
  for (std::size_t i = 1; i < m.size(); ++i)
    EXPECT_LT(m.blocks()[i - 1].theta_stamp, m.blocks()[i].theta_stamp);
}

TEST(MemoryBuffer, RejectsWidthChange) {
  std::mt19937_64 rng(4);
  MemoryBuffer m(3);
  m.push(testutil::random_batch(3, 1, 2, rng));
  EXPECT_THROW(m.push(testutil::random_batch(4, 1, 2, rng)),
               std::invalid_argument);
}

TEST(RegHistory, SumAndFeasibility) {
  RegHistory h;
  EXPECT_THROW(h.push(0.0), std::invalid_argument);
  h.push(0.5);
  h.push(0.25);
  EXPECT_DOUBLE_EQ(h.running_sum(), 0.75);
  EXPECT_TRUE(h.feasible(-0.5));
  EXPECT_FALSE(h.feasible(-0.75));
  EXPECT_THROW(h.push(-1.0), std::invalid_argument);
}

TEST(SlimTik, FirstIterationIsRidge) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto cur = testutil::random_batch(5, 3, 4, rng);
    const double lambda = 0.2;
    MatrixXd Z = cur.features;
    MatrixXd direct =
        ((Z * Z.transpose() + lambda * MatrixXd::Identity(5, 5))
             .ldlt()
             .solve(Z * cur.targets.transpose()))
            .transpose();
    MatrixXd a = slimtik_step(testutil::gaussian(3, 5, rng), MemoryBuffer(4),
                              cur, RegHistory{}, lambda);
    MatrixXd b = slimtik_step(MatrixXd::Zero(3, 5), MemoryBuffer(4), cur,
                              RegHistory{}, lambda);
    EXPECT_LE(testutil::rel_err(a, direct), 1e-12);
    EXPECT_LE(testutil::rel_err(a, b), 1e-12);
  }
}

TEST(SlimTik, LargeLambdaShrinksToZero) {
  std::mt19937_64 rng(9);
  auto cur = testutil::random_batch(4, 2, 6, rng);
  MatrixXd W = slimtik_step(MatrixXd::Ones(2, 4), MemoryBuffer(0), cur,
                            RegHistory{}, 1e12);
  EXPECT_LE(W.norm(), 1e-6 * cur.targets.norm());
}

TEST(SlimTik, TwoBatchDenseOracle) {
  std::mt19937_64 rng(10);
  auto b1 = testutil::random_batch(4, 2, 3, rng);
  auto b2 = testutil::random_batch(4, 2, 3, rng);
  RegHistory h;
  h.push(0.1);
  MatrixXd W1 = slimtik_step(MatrixXd::Zero(2, 4), MemoryBuffer(1), b1,
                             RegHistory{}, 0.1);
  MatrixXd W2 = slimtik_step(W1, full_memory({b1}), b2, h, 0.1);
  VectorXd oracle = dense_stacked_solve(W1, {b1}, b2, 0.1, 0.1);
  EXPECT_LE(testutil::rel_err(vec(W2), oracle), 1e-10);
}

TEST(SlimTik, EmptyMemoryKeepsShiftRows) {
  std::mt19937_64 rng(12);
  auto cur = testutil::random_batch(6, 3, 2, rng);
  MatrixXd W_prev = testutil::gaussian(3, 6, rng);
  RegHistory h;
  h.push(0.4);
  h.push(0.3);
  MatrixXd W = slimtik_step(W_prev, MemoryBuffer(0), cur, h, 0.05);
  VectorXd oracle = dense_stacked_solve(W_prev, {}, cur, 0.7, 0.05);
  EXPECT_LE(testutil::rel_err(vec(W), oracle), 1e-10);
}

TEST(SlimTik, UpdateFormDuality) {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> nb(1, 5), nf(2, 6), nt(1, 3), bs(1, 4);
  std::uniform_real_distribution<double> lam(-2.0, 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = nb(rng), f = nf(rng), t = nt(rng), b = bs(rng);
    std::vector<FeatureBatch> blocks;
    MemoryBuffer memory(k);
    RegHistory h;
    MatrixXd W = MatrixXd::Zero(t, f);
    for (int i = 0; i < k; ++i) {
      blocks.push_back(testutil::random_batch(f, t, b, rng, i));
      const double L = std::pow(10.0, lam(rng));
      VectorXd ref = stik_update_form(vec(W), blocks, h, L);
      W = slimtik_step(W, memory, blocks.back(), h, L);
      EXPECT_LE(testutil::rel_err(vec(W), ref), 1e-10) << "trial " << trial;
      h.push(L);
      memory.push(blocks.back());
    }
  }
}

TEST(SlimTik, ZeroResidualKeepsIterate) {
  std::mt19937_64 rng(15);
  MatrixXd W_prev = testutil::gaussian(2, 4, rng);
  auto cur = testutil::random_batch(4, 2, 3, rng);
  cur.targets = W_prev * cur.features;
  auto mem = testutil::random_batch(4, 2, 3, rng);
  RegHistory h;
  h.push(0.5);
  MatrixXd W = slimtik_step(W_prev, full_memory({mem}), cur, h, 0.0);
  EXPECT_LE(testutil::rel_err(W, W_prev), 1e-12);
}

TEST(SlimTik, OneEpochIsTikhonov) {
  std::mt19937_64 rng(16);
  const int batches = 6, b = 4, f = 5, t = 2;
  const double lambda = 0.3;
  std::vector<FeatureBatch> blocks;
  MemoryBuffer memory(batches);
  RegHistory h;
  MatrixXd W = MatrixXd::Zero(t, f);
  for (int i = 0; i < batches; ++i) {
    blocks.push_back(testutil::random_batch(f, t, b, rng, i));
    W = slimtik_step(W, memory, blocks.back(), h, lambda / batches);
    h.push(lambda / batches);
    memory.push(blocks.back());
  }
  MatrixXd Z(f, batches * b), C(t, batches * b);
  for (int i = 0; i < batches; ++i) {
    Z.middleCols(i * b, b) = blocks[i].features;
    C.middleCols(i * b, b) = blocks[i].targets;
  }
  MatrixXd tik = ((Z * Z.transpose() + lambda * MatrixXd::Identity(f, f))
                      .ldlt()
                      .solve(Z * C.transpose()))
                     .transpose();
  EXPECT_LE(testutil::rel_err(W, tik), 1e-10);
}

// W_prev at the full-data Tikhonov solution: the step moves no further from
// it than the dense stacked solve does.
TEST(SlimTik, FixedPointSanityBound) {
  std::mt19937_64 rng(18);
  const int f = 4, t = 1;
  std::vector<FeatureBatch> blocks;
  for (int i = 0; i < 3; ++i) blocks.push_back(testutil::random_batch(f, t, 5, rng));
  MatrixXd Z(f, 15), C(t, 15);
  for (int i = 0; i < 3; ++i) {
    Z.middleCols(i * 5, 5) = blocks[i].features;
    C.middleCols(i * 5, 5) = blocks[i].targets;
  }
  const double lambda = 0.6;
  MatrixXd W_star = ((Z * Z.transpose() + lambda * MatrixXd::Identity(f, f))
                         .ldlt()
                         .solve(Z * C.transpose()))
                        .transpose();
  RegHistory h;
  h.push(0.4);
  MatrixXd W = slimtik_step(W_star, full_memory({blocks[0], blocks[1]}),
                            blocks[2], h, 0.2);
  VectorXd direct = dense_stacked_solve(W_star, {blocks[0], blocks[1]},
                                        blocks[2], 0.4, 0.2);
  EXPECT_LE((vec(W) - vec(W_star)).norm(),
            (direct - vec(W_star)).norm() + 1e-12);
}

TEST(SlimTik, RejectsInfeasibleLambda) {
  std::mt19937_64 rng(20);
  auto cur = testutil::random_batch(3, 1, 2, rng);
  RegHistory h;
  h.push(0.1);
  EXPECT_THROW(slimtik_step(MatrixXd::Zero(1, 3), MemoryBuffer(0), cur, h, -0.1),
               std::invalid_argument);
  EXPECT_THROW(slimtik_step(MatrixXd::Zero(1, 3), MemoryBuffer(0), cur,
                            RegHistory{}, 0.0),
               std::invalid_argument);
}

TEST(SlimTik, RejectsFeatureWidthChange) {
  std::mt19937_64 rng(21);
  MemoryBuffer m(2);
  m.push(testutil::random_batch(3, 1, 2, rng));
  auto cur = testutil::random_batch(4, 1, 2, rng);
  RegHistory h;
  h.push(1.0);
  EXPECT_THROW(slimtik_step(MatrixXd::Zero(1, 4), m, cur, h, 1.0),
               std::invalid_argument);
}

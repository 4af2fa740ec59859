#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "slimtrain/data.hpp"

using namespace slimtrain;

TEST(Peaks, KnownValues) {
  EXPECT_NEAR(peaks(0, 0), (3.0 - 1.0 / 3.0) * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(peaks(0, 0), 0.981012, 1e-6);
  EXPECT_LE(std::abs(peaks(10, 10)), 1e-12);
  // only the second and third terms survive at x = 1
  const double f10 = -10.0 * (0.2 - 1.0) * std::exp(-1.0) -
                     std::exp(-4.0) / 3.0;
  EXPECT_NEAR(peaks(1, 0), f10, 1e-15);
}

TEST(PeaksDataset, UniformShapesAndBounds) {
  auto d = make_peaks_dataset(2000, -3, 3, Sampling::Uniform, 1);
  EXPECT_EQ(d.inputs.rows(), 2);
  EXPECT_EQ(d.inputs.cols(), 2000);
  EXPECT_EQ(d.targets.rows(), 1);
  EXPECT_GE(d.inputs.minCoeff(), -3.0);
  EXPECT_LE(d.inputs.maxCoeff(), 3.0);
  for (Eigen::Index i = 0; i < 20; ++i)
    EXPECT_EQ(d.targets(0, i), peaks(d.inputs(0, i), d.inputs(1, i)));
  auto e = make_peaks_dataset(2000, -3, 3, Sampling::Uniform, 1);
  EXPECT_EQ(d.inputs, e.inputs);
  EXPECT_NE(make_peaks_dataset(2000, -3, 3, Sampling::Uniform, 2).inputs,
            d.inputs);
}

TEST(PeaksDataset, GridIsRowMajorLattice) {
  auto d = make_peaks_dataset(9, -1, 1, Sampling::Grid, 0);
  ASSERT_EQ(d.size(), 9);
  EXPECT_DOUBLE_EQ(d.inputs(0, 0), -1);
  EXPECT_DOUBLE_EQ(d.inputs(1, 0), -1);
  EXPECT_DOUBLE_EQ(d.inputs(0, 1), 0);
  EXPECT_DOUBLE_EQ(d.inputs(1, 1), -1);
  EXPECT_DOUBLE_EQ(d.inputs(0, 3), -1);
  EXPECT_DOUBLE_EQ(d.inputs(1, 3), 0);
  EXPECT_DOUBLE_EQ(d.inputs(0, 8), 1);
  EXPECT_DOUBLE_EQ(d.inputs(1, 8), 1);
  EXPECT_THROW(make_peaks_dataset(10, -1, 1, Sampling::Grid, 0),
               std::invalid_argument);
}

TEST(TeacherDataset, ShapesAndDeterminism) {
  TeacherSpec spec;
  spec.seed = 3;
  auto a = make_teacher_dataset(spec);
  auto b = make_teacher_dataset(spec);
  EXPECT_EQ(a.inputs.rows(), 55);
  EXPECT_EQ(a.targets.rows(), 72);
  EXPECT_EQ(a.size(), 2000);
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_TRUE(a.targets.allFinite());
}

TEST(TeacherDataset, VarianceGrowsWithNoise) {
  TeacherSpec spec;
  spec.n_samples = 500;
  spec.seed = 4;
  double last = -1;
  for (double noise : {0.0, 0.5, 2.0}) {
    spec.noise_std = noise;
    auto d = make_teacher_dataset(spec);
    const Eigen::ArrayXXd c = d.targets.array();
    const double var = (c.colwise() - c.rowwise().mean()).square().mean();
    EXPECT_GT(var, last);
    last = var;
  }
}

TEST(ShufflePartition, FloorRuleAndDisjointness) {
  auto p = shuffle_partition(10, 5, 1);
  ASSERT_EQ(p.size(), 2u);
  std::set<Eigen::Index> seen;
  for (const auto& b : p) {
    EXPECT_EQ(b.size(), 5u);
    seen.insert(b.begin(), b.end());
  }
  EXPECT_EQ(seen.size(), 10u);

  auto q = shuffle_partition(11, 5, 1);
  ASSERT_EQ(q.size(), 2u);
  std::set<Eigen::Index> s2;
  for (const auto& b : q) s2.insert(b.begin(), b.end());
  EXPECT_EQ(s2.size(), 10u);
}

TEST(ShufflePartition, SeedsGiveDistinctPermutations) {
  auto a = shuffle_partition(50, 5, 1);
  auto b = shuffle_partition(50, 5, 2);
  auto c = shuffle_partition(50, 5, 3);
  EXPECT_NE(a, b);
  EXPECT_NE(b, c);
  EXPECT_NE(a, c);
  EXPECT_EQ(a, shuffle_partition(50, 5, 1));
  EXPECT_THROW(shuffle_partition(3, 5, 1), std::invalid_argument);
}

TEST(SplitValidation, SizesAndDisjoint) {
  auto d = make_peaks_dataset(200, -3, 3, Sampling::Uniform, 5);
  auto [tr, va] = split_validation(d, 0.1, 9);
  EXPECT_EQ(va.size(), 20);
  EXPECT_EQ(tr.size(), 180);
  std::set<std::pair<double, double>> pts;
  for (Eigen::Index i = 0; i < tr.size(); ++i)
    pts.emplace(tr.inputs(0, i), tr.inputs(1, i));
  for (Eigen::Index i = 0; i < va.size(); ++i)
    EXPECT_EQ(pts.count({va.inputs(0, i), va.inputs(1, i)}), 0u);
}

TEST(DatasetCsv, Header) {
  auto d = make_peaks_dataset(4, -1, 1, Sampling::Grid, 0);
  std::ostringstream out;
  write_dataset_csv(out, d);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x1,x2,c1");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(DeriveSeed, DeterministicAndSpread) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

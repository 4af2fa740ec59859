#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace slimtrain {

struct Dataset {
  Eigen::MatrixXd inputs;   // n_in x N
  Eigen::MatrixXd targets;  // n_target x N
  std::string name;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return inputs.cols(); }
  Eigen::Index n_in() const { return inputs.rows(); }
  Eigen::Index n_target() const { return targets.rows(); }

  Dataset subset(const std::vector<Eigen::Index>& idx) const;
};

/// The usual two-dimensional "peaks" test function:
/// 3(1-x)^2 e^{-x^2-(y+1)^2} - 10(x/5 - x^3 - y^5) e^{-x^2-y^2}
///   - 1/3 e^{-(x+1)^2-y^2}
double peaks(double x, double y);

enum class Sampling { Uniform, Grid };

/// Uniform: i.i.d. points on [lo, hi]^2. Grid: sqrt(N) x sqrt(N) lattice in
/// row-major order (x varies fastest); N must be a perfect square.
Dataset make_peaks_dataset(Eigen::Index n, double lo, double hi,
                           Sampling sampling, std::uint64_t seed);

struct TeacherSpec {
  Eigen::Index n_in = 55;
  Eigen::Index n_target = 72;
  Eigen::Index n_samples = 2000;
  Eigen::Index teacher_width = 16;
  Eigen::Index teacher_depth = 4;
  double teacher_final_time = 4.0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

/// Targets from a frozen random tanh ResNet followed by a random readout.
/// Inputs are standard normal (unit variance per coordinate).
Dataset make_teacher_dataset(const TeacherSpec& spec);

/// Seeded permutation cut into floor(N / batch_size) batches; the remainder
/// is dropped for this epoch.
std::vector<std::vector<Eigen::Index>> shuffle_partition(
    Eigen::Index n, Eigen::Index batch_size, std::uint64_t epoch_seed);

/// Seeded holdout: returns (train, validation) with round(fraction * N)
/// validation samples.
std::pair<Dataset, Dataset> split_validation(const Dataset& data,
                                             double fraction,
                                             std::uint64_t seed);

/// CSV with header x1..x_nin, c1..c_ntarget, one row per sample.
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Deterministic seed derivation for sub-streams (epochs, splits, ...).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace slimtrain

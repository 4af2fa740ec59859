#include "slimtrain/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "slimtrain/resnet.hpp"

namespace slimtrain {

Dataset Dataset::subset(const std::vector<Eigen::Index>& idx) const {
  Dataset out;
  out.name = name;
  out.seed = seed;
  out.inputs = inputs(Eigen::all, idx);
  out.targets = targets(Eigen::all, idx);
  return out;
}

double peaks(double x, double y) {
  return 3.0 * (1.0 - x) * (1.0 - x) * std::exp(-x * x - (y + 1.0) * (y + 1.0)) -
         10.0 * (x / 5.0 - x * x * x - std::pow(y, 5)) * std::exp(-x * x - y * y) -
         std::exp(-(x + 1.0) * (x + 1.0) - y * y) / 3.0;
}

Dataset make_peaks_dataset(Eigen::Index n, double lo, double hi,
                           Sampling sampling, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("peaks dataset: N must be >= 1");
  if (!(lo < hi)) throw std::invalid_argument("peaks dataset: empty domain");
  Dataset d;
  d.name = "peaks";
  d.seed = seed;
  d.inputs.resize(2, n);
  if (sampling == Sampling::Uniform) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (Eigen::Index i = 0; i < n; ++i) {
      d.inputs(0, i) = dist(rng);
      d.inputs(1, i) = dist(rng);
    }
  } else {
    const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(n)));
    if (side * side != n) {
      throw std::invalid_argument("peaks dataset: grid N must be a square");
    }
    const double h = side > 1 ? (hi - lo) / static_cast<double>(side - 1) : 0.0;
    for (Eigen::Index r = 0; r < side; ++r) {
      for (Eigen::Index c = 0; c < side; ++c) {
        d.inputs(0, r * side + c) = lo + h * static_cast<double>(c);
        d.inputs(1, r * side + c) = lo + h * static_cast<double>(r);
      }
    }
  }
  d.targets.resize(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.targets(0, i) = peaks(d.inputs(0, i), d.inputs(1, i));
  }
  return d;
}

Dataset make_teacher_dataset(const TeacherSpec& spec) {
  if (spec.n_in < 1 || spec.n_target < 1 || spec.n_samples < 1 ||
      spec.teacher_width < 1 || spec.noise_std < 0.0) {
    throw std::invalid_argument("teacher dataset: invalid sizes");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Dataset d;
  d.name = "teacher";
  d.seed = spec.seed;
  d.inputs.resize(spec.n_in, spec.n_samples);
  for (Eigen::Index j = 0; j < spec.n_samples; ++j) {
    for (Eigen::Index i = 0; i < spec.n_in; ++i) d.inputs(i, j) = normal(rng);
  }
  const auto teacher = init_params<double>(
      spec.teacher_width, spec.teacher_depth, spec.n_in,
      spec.teacher_final_time, derive_seed(spec.seed, 1));
  Eigen::MatrixXd readout(spec.n_target, spec.teacher_width + 1);
  for (Eigen::Index j = 0; j < readout.cols(); ++j) {
    for (Eigen::Index i = 0; i < readout.rows(); ++i) readout(i, j) = unit(rng);
  }
  const auto tape = resnet_forward(teacher, d.inputs);
  d.targets = readout * augment_features(tape.output());
  // Noise draws are taken even at noise_std = 0 so that the clean part is
  // identical across noise levels for a fixed seed.
  Eigen::MatrixXd noise(spec.n_target, spec.n_samples);
  for (Eigen::Index j = 0; j < spec.n_samples; ++j) {
    for (Eigen::Index i = 0; i < spec.n_target; ++i) noise(i, j) = normal(rng);
  }
  if (spec.noise_std > 0.0) d.targets += spec.noise_std * noise;
  return d;
}

std::vector<std::vector<Eigen::Index>> shuffle_partition(
    Eigen::Index n, Eigen::Index batch_size, std::uint64_t epoch_seed) {
  if (batch_size < 1 || n < batch_size) {
    throw std::invalid_argument("shuffle_partition: need N >= batch_size >= 1");
  }
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(epoch_seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Eigen::Index count = n / batch_size;
  std::vector<std::vector<Eigen::Index>> batches(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    batches[k].assign(perm.begin() + k * batch_size,
                      perm.begin() + (k + 1) * batch_size);
  }
  return batches;
}

std::pair<Dataset, Dataset> split_validation(const Dataset& data,
                                             double fraction,
                                             std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split_validation: fraction in [0, 1)");
  }
  const Eigen::Index n = data.size();
  const auto n_val = static_cast<Eigen::Index>(
      std::llround(fraction * static_cast<double>(n)));
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Eigen::Index> val(perm.begin(), perm.begin() + n_val);
  std::vector<Eigen::Index> train(perm.begin() + n_val, perm.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {data.subset(train), data.subset(val)};
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (Eigen::Index i = 0; i < data.n_in(); ++i) {
    out << (i ? "," : "") << 'x' << (i + 1);
  }
  for (Eigen::Index i = 0; i < data.n_target(); ++i) out << ",c" << (i + 1);
  out << '\n';
  const auto old = out.precision(17);
  for (Eigen::Index j = 0; j < data.size(); ++j) {
    for (Eigen::Index i = 0; i < data.n_in(); ++i) {
      out << (i ? "," : "") << data.inputs(i, j);
    }
    for (Eigen::Index i = 0; i < data.n_target(); ++i) {
      out << ',' << data.targets(i, j);
    }
    out << '\n';
  }
  out.precision(old);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace slimtrain

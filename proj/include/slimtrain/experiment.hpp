#pragma once

// Command implementations behind the `slimtrain` executable.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <iosfwd>
#include <string>
#include <vector>

#include "slimtrain/config.hpp"

namespace slimtrain {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct RunOutcome {
  int status = kExitOk;
  std::string run_dir;
  TrainResult result;
};

/// Trains one configuration and writes manifest.txt, iterations.csv,
/// epochs.csv, sgcv.csv, checkpoint_best, checkpoint_final (and plots when
/// run.plots=true) into config.output_dir.
RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

int run_command(const std::string& config_path, std::ostream& log,
                const std::string& output_override = {});

/// Cartesian product over `sweep.<key>=v1,v2,...` entries; one run directory
/// per cell under run.output_dir plus summary.csv.
int sweep_command(const std::string& config_path, std::ostream& log);

struct Fig1Options {
  double lambda = 1e-3;
  Eigen::Index grid_side = 20;  // 400 training points
  Eigen::Index batch_size = 5;
  double adam_lr = 1e-3;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/fig1";
};

struct Fig1Result {
  std::vector<double> stik_error;  // ||w_k - w_hat|| / ||w_hat|| per iteration
  std::vector<double> adam_error;
};

/// Linear-only comparison on fixed features: full-memory sTik with constant
/// Lambda_k = lambda / iterations_per_epoch versus ADAM, one epoch.
Fig1Result run_fig1(const Fig1Options& options);
int demo_fig1_command(const Fig1Options& options, std::ostream& log);

/// Regenerates loss.svg and lambda_heatmap.svg from a run directory's CSVs.
int plot_command(const std::string& run_dir, std::ostream& log);

}  // namespace slimtrain

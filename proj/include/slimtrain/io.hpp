#pragma once

// Run artifacts: CSV logs, checkpoints and small SVG plots.
//
// Checkpoint container: a text header terminated by a line "END", followed
// by little-endian float64 values, theta in flatten() order and then vec(W)
// (column-major):
//
//   SLIMTRAIN-CHECKPOINT 1
//   mode=slimtrain
//   n_in=2
//   width=8
//   depth=8
//   step_h=0.625
//   n_target=1
//   epoch=12
//   theta_count=600
//   w_count=9
//   END

#include <iosfwd>
#include <string>
#include <vector>

#include "slimtrain/trainer.hpp"

namespace slimtrain {

void write_iterations_csv(std::ostream& out,
                          const std::vector<IterationRecord>& records);
void write_epochs_csv(std::ostream& out,
                      const std::vector<EpochRecord>& records);
void write_sgcv_csv(std::ostream& out, const std::vector<SgcvRecord>& records);

std::vector<IterationRecord> read_iterations_csv(std::istream& in);
std::vector<EpochRecord> read_epochs_csv(std::istream& in);

struct Checkpoint {
  std::string mode;
  int epoch = 0;
  Model model;
};

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::string& path);

/// Train/validation loss per epoch on a log axis.
std::string loss_svg(const std::vector<EpochRecord>& epochs);
/// log10(Lambda_k) image: epochs along x, iteration within epoch along y.
std::string lambda_heatmap_svg(const std::vector<IterationRecord>& records);

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace slimtrain

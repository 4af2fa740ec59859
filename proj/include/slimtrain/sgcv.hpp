#pragma once

// Sampled generalized cross-validation for the per-iteration regularization
// increment Lambda_k.

#include <optional>
#include <utility>
#include <vector>

#include "slimtrain/stik.hpp"

namespace slimtrain {

struct SgcvConfig {
  double grid_lo = -12.0;  // log10
  double grid_hi = 2.0;    // log10
  int grid_points = 25;
  int refine_iters = 20;
  // Also try negative Lambda down to -sum(history).
  bool signed_grid = false;
  // m = |T_k| * n_target, the row count of A_k. false gives m = |T_k|, which
  // can drive the denominator negative when n_target > 1.
  bool count_targets = true;

  void validate() const;
};

/// sGCV(Lambda) = m ||A_k w_k(Lambda) - b_k||^2 / (m - trace(A_k T_k A_k^T))^2
/// with m = |T_k| (or |T_k| n_target when count_targets). Returns +inf when
/// the denominator is within 1e-12 of zero.
double sgcv_value(double lambda, const SlimTikSystem& system,
                  bool count_targets = true);

struct SgcvSelection {
  double lambda = 0.0;
  double value = 0.0;
  double grid_argmin = 0.0;
  std::vector<std::pair<double, double>> grid;  // (Lambda, value), evaluated
};

/// Coarse grid scan followed by golden-section refinement around the grid
/// argmin. Ties (relative 1e-12) go to the larger Lambda. Empty when no
/// candidate is feasible.
std::optional<SgcvSelection> sgcv_select(const SgcvConfig& config,
                                         const SlimTikSystem& system);

/// Candidate Lambda values in ascending order, feasible or not.
std::vector<double> sgcv_candidates(const SgcvConfig& config);

}  // namespace slimtrain

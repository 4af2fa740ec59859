#include "slimtrain/sgcv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace slimtrain {

void SgcvConfig::validate() const {
  if (!(grid_lo < grid_hi)) {
    throw std::invalid_argument("sgcv: grid_lo must be below grid_hi");
  }
  if (grid_points < 3) {
    throw std::invalid_argument("sgcv: grid_points must be at least 3");
  }
  if (refine_iters < 0) {
    throw std::invalid_argument("sgcv: refine_iters must be non-negative");
  }
}

double sgcv_value(double lambda, const SlimTikSystem& system,
                  bool count_targets) {
  const double shift = lambda + system.history_sum();
  if (!(shift > 0.0)) {
    throw std::invalid_argument("sgcv: infeasible lambda");
  }
  const FeatureBatch& cur = system.current();
  const double n_target = static_cast<double>(cur.targets.rows());
  const double m = static_cast<double>(cur.size()) *
                   (count_targets ? n_target : 1.0);
  const MatrixXd W = system.solve(lambda);
  const double residual = system.current_residual_sq(W);
  const double trace =
      n_target * filtered_trace(system.factors(), cur.features, shift);
  const double denom = m - trace;
  if (std::abs(denom) <= 1e-12) {
    return std::numeric_limits<double>::infinity();
  }
  const double value = m * residual / (denom * denom);
  return std::isnan(value) ? std::numeric_limits<double>::infinity() : value;
}

std::vector<double> sgcv_candidates(const SgcvConfig& config) {
  config.validate();
  std::vector<double> positive(config.grid_points);
  const double step =
      (config.grid_hi - config.grid_lo) / (config.grid_points - 1);
  for (int i = 0; i < config.grid_points; ++i) {
    positive[i] = std::pow(10.0, config.grid_lo + step * i);
  }
  if (!config.signed_grid) return positive;
  std::vector<double> out;
  out.reserve(2 * positive.size());
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) {
    out.push_back(-*it);
  }
  out.insert(out.end(), positive.begin(), positive.end());
  return out;
}

namespace {

struct Point {
  double lambda;
  double value;
};

// Strictly better, or tied within 1e-12 relative with a larger lambda.
bool better(const Point& a, const Point& b) {
  const double scale = std::max(std::abs(a.value), std::abs(b.value));
  const bool tied = a.value == b.value ||
                    (std::isfinite(scale) &&
                     std::abs(a.value - b.value) <= 1e-12 * scale);
  if (tied) return a.lambda > b.lambda;
  return a.value < b.value;
}

}  // namespace

std::optional<SgcvSelection> sgcv_select(const SgcvConfig& config,
                                         const SlimTikSystem& system) {
  const std::vector<double> candidates = sgcv_candidates(config);
  const double hist = system.history_sum();

  SgcvSelection sel;
  for (double lambda : candidates) {
    if (!(lambda + hist > 0.0)) continue;
    sel.grid.emplace_back(lambda,
                          sgcv_value(lambda, system, config.count_targets));
  }
  if (sel.grid.empty()) return std::nullopt;

  std::size_t arg = 0;
  for (std::size_t i = 1; i < sel.grid.size(); ++i) {
    if (better({sel.grid[i].first, sel.grid[i].second},
               {sel.grid[arg].first, sel.grid[arg].second})) {
      arg = i;
    }
  }
  Point best{sel.grid[arg].first, sel.grid[arg].second};
  sel.grid_argmin = best.lambda;

  const double lo = sel.grid[arg > 0 ? arg - 1 : arg].first;
  const double hi = sel.grid[arg + 1 < sel.grid.size() ? arg + 1 : arg].first;
  if (config.refine_iters > 0 && lo < hi) {
    // log coordinates when the bracket is positive, linear otherwise
    const bool log_coords = lo > 0.0;
    auto to_lambda = [&](double u) {
      return log_coords ? std::pow(10.0, u) : u;
    };
    auto eval = [&](double u) {
      Point p{to_lambda(u), std::numeric_limits<double>::infinity()};
      if (p.lambda + hist > 0.0) {
        p.value = sgcv_value(p.lambda, system, config.count_targets);
      }
      if (better(p, best)) best = p;
      return p;
    };
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = log_coords ? std::log10(lo) : lo;
    double b = log_coords ? std::log10(hi) : hi;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    Point fc = eval(c);
    Point fd = eval(d);
    for (int it = 2; it < config.refine_iters; ++it) {
      if (better(fc, fd)) {
        b = d;
        d = c;
        fd = fc;
        c = b - ratio * (b - a);
        fc = eval(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + ratio * (b - a);
        fd = eval(d);
      }
    }
  }
  sel.lambda = best.lambda;
  sel.value = best.value;
  return sel;
}

}  // namespace slimtrain

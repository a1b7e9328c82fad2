#pragma once

#include <functional>
#include <span>
#include <vector>

namespace branchkit {

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_steps = 200000;
  double initial_step = 0.0;  // 0 picks a step from the initial slope
};

struct OdeResult {
  std::vector<std::vector<double>> states;  // one per requested output time
  // Sum over accepted steps of the largest embedded local error component.
  double error_estimate = 0.0;
  int accepted = 0;
  int rejected = 0;
};

/// Dormand-Prince 5(4) with adaptive steps, integrating from t0 through the
/// increasing output times. Throws Convergence when the step budget runs out
/// or the step size underflows.
OdeResult dormand_prince(const OdeRhs& rhs, std::vector<double> y0, double t0,
                         std::span<const double> times, const OdeOptions& opts);

}  // namespace branchkit

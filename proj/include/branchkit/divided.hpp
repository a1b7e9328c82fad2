#pragma once

#include <functional>
#include <vector>

namespace branchkit {

/// A real function known through point values and Taylor expansions.
struct SmoothFunction {
  std::function<double(double)> value;
  std::function<std::vector<double>(double c, std::size_t n)> taylor;
  /// Distance from c to the nearest singularity (+inf for entire functions).
  std::function<double(double c)> taylor_radius;
};

/// Divided difference g[y_0, ..., y_n] with repeated nodes allowed. Clustered
/// nodes are handled by a Taylor expansion about their midpoint,
///   g[y_0..y_n] = sum_m T_{n+m}(c) h_m(y_0 - c, ..., y_n - c),
/// with h_m the complete homogeneous symmetric polynomials; well separated
/// nodes use the two-term recursion.
double divided_difference(const SmoothFunction& g, std::vector<double> nodes);

}  // namespace branchkit

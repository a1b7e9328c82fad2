#include "branchkit/divided.hpp"

#include <algorithm>
#include <cmath>

#include "branchkit/error.hpp"

namespace branchkit {

namespace {

constexpr double kClusterWidth = 0.05;
constexpr std::size_t kExtraTerms = 28;

double dd_sorted(const SmoothFunction& g, const double* y, std::size_t count) {
  if (count == 1) return g.value(y[0]);
  const double lo = y[0], hi = y[count - 1];
  const double spread = hi - lo;
  const double c = 0.5 * (lo + hi);
  const double rho = g.taylor_radius ? g.taylor_radius(c) : INFINITY;
  if (spread <= std::min(kClusterWidth, 0.25 * rho)) {
    const std::size_t n = count - 1;
    const std::vector<double> t = g.taylor(c, n + kExtraTerms);
    std::vector<double> h(kExtraTerms + 1, 0.0);
    h[0] = 1.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double z = y[i] - c;
      for (std::size_t m = 1; m <= kExtraTerms; ++m) h[m] += z * h[m - 1];
    }
    double acc = 0.0;
    for (std::size_t m = kExtraTerms + 1; m-- > 0;) acc += t[n + m] * h[m];
    return acc;
  }
  return (dd_sorted(g, y + 1, count - 1) - dd_sorted(g, y, count - 1)) / spread;
}

}  // namespace

double divided_difference(const SmoothFunction& g, std::vector<double> nodes) {
  if (nodes.empty()) fail(ErrorCode::DegenerateInput, "divided difference needs a node");
  std::sort(nodes.begin(), nodes.end());
  return dd_sorted(g, nodes.data(), nodes.size());
}

}  // namespace branchkit

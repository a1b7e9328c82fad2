#pragma once

#include <functional>

namespace branchkit {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = true;
};

/// Globally adaptive 21-point Gauss-Kronrod quadrature on [a, b]. The
/// interval with the largest error estimate is bisected until the summed
/// estimate drops below max(abs_tol, rel_tol * |value|). Reversed limits flip
/// the sign. The integrand is never evaluated at the endpoints.
QuadResult gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                         double abs_tol, double rel_tol, int max_intervals = 1000);

/// As above, throwing Convergence when the tolerance is not met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, double rel_tol, int max_intervals = 1000);

}  // namespace branchkit

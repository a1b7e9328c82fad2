#pragma once

// F_t(s) = E s^{Z_t} for the process started from one particle, solving the
// backward equation dF/dt = lambda (f(F) - F), F_0(s) = s.

#include <span>
#include <vector>

#include "branchkit/law.hpp"

namespace branchkit {

enum class Route { ODE, SeriesODE, IntegralInversion };
const char* to_string(Route r) noexcept;

struct EvolveResult {
  double t = 0.0;
  double s = 0.0;          // evaluation point, or the expansion centre (series route)
  std::size_t order = 0;   // series route only
  double value = 0.0;      // F_t(s)
  double complement = 0.0; // 1 - F_t(s), accurate when F_t(s) is close to 1
  std::vector<double> coeffs;  // series route: Taylor coefficients of F_t at s
  double error_estimate = 0.0;
  Route route = Route::ODE;
};

/// M_t = e^{lambda (m - 1) t}.
double population_mean(double t, const OffspringLaw& law);

/// 1 - nabla_a f(x) at a fixed point a, factored through the other fixed
/// point when there is one so that it stays accurate near both roots.
double drift(const OffspringLaw& law, const FixedPoints& fp, double a, double x);

/// Carries the fixed points so repeated evaluations on one law skip the root
/// finding. Immutable; safe to share between threads.
class Evolver {
 public:
  explicit Evolver(OffspringLaw law);
  const OffspringLaw& law() const { return law_; }
  const FixedPoints& fixed_points() const { return fp_; }

  /// Scalar ODE route. The state is ln|F - a| with a the fixed point on the
  /// same side as s, so values near a keep full relative accuracy.
  EvolveResult scalar(double t, double s, double tol = 1e-12) const;
  std::vector<EvolveResult> scalar(std::span<const double> times, double s, double tol = 1e-12) const;
  /// As scalar() at s = 1 - one_minus_s, for s too close to 1 to represent.
  EvolveResult scalar_near_one(double t, double one_minus_s, double tol = 1e-12) const;
  /// Integrates dF/dt = lambda (f(F) - F) directly, with no anchor.
  EvolveResult raw(double t, double s, double tol = 1e-12) const;

  /// Series route: the same equation in the ring of power series truncated at
  /// `order`, started from C_0(s) = s expanded about `center`. At center 0 the
  /// coefficients are P(Z_t = k).
  std::vector<EvolveResult> series(std::span<const double> times, std::size_t order,
                                   double tol = 1e-12, double center = 0.0) const;
  EvolveResult series(double t, std::size_t order, double tol = 1e-12, double center = 0.0) const;
  /// F_t(s) by summing the series route at centre 0, doubling the order until
  /// the estimated tail drops below tol or max_order is reached.
  EvolveResult series_value(double t, double s, double tol = 1e-10,
                            std::size_t max_order = 1024) const;

  /// Solves the integral equation int_s^F dx / (f(x) - x) = lambda t for F,
  /// with the singularities at the fixed points extracted analytically.
  EvolveResult integral_inverse(double t, double s, double tol = 1e-12) const;

  /// 1 - nabla_a f(x) for a fixed point a, in a cancellation-free form.
  double drift(double a, double x) const;

 private:
  struct Anchor {
    double a;
    double sign;  // F = a + sign * w
  };
  Anchor anchor_for(double s) const;
  EvolveResult run_scalar(std::span<const double> times, Anchor an, double w0,
                          double tol, std::vector<EvolveResult>& out) const;

  OffspringLaw law_;
  FixedPoints fp_;
};

EvolveResult scalar_F(double t, double s, const OffspringLaw& law, double tol = 1e-12);
EvolveResult series_F(double t, std::size_t order, const OffspringLaw& law, double tol = 1e-12);
EvolveResult integral_inverse(double t, double s, const OffspringLaw& law, double tol = 1e-12);

struct RegularityReport {
  bool regular = true;
  bool finite_mean = true;
  // int_{1-eps}^1 dx / (x - f(x)) over the probed range; +inf when divergent.
  double integral = 0.0;
  double eps = 0.0;
};

/// A law is regular when int^1 dx / (x - f(x)) diverges; finite-mean laws
/// always are. Infinite-mean laws are probed numerically.
RegularityReport regularity(const OffspringLaw& law);

}  // namespace branchkit

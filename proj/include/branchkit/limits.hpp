#pragma once

// Limit laws for the three regimes, computed from the pi functions.

#include <optional>
#include <vector>

#include "branchkit/pifn.hpp"
#include "branchkit/series.hpp"

namespace branchkit {

struct SubcriticalLimit {
  // e^{lambda (1-m) t} Q_t -> c; zero when pi_1(1) diverges.
  double c = 0.0;
  double pi_1_at_1 = 0.0;  // +inf when divergent
  bool pi_signal_diverging = false;
  bool xlogx_signal_diverging = false;
  // psi(s) = 1 - (1-s) e^{pi_1(s)}, the limit of E(s^{Z_t} | Z_t > 0).
  TruncatedSeries psi;
};

/// Requires m < 1.
SubcriticalLimit subcritical_limit(const PiEvaluator& pe, std::size_t order = 64);

/// Coefficients of E(s^{Z_t} | Z_t > 0) = 1 - (1 - F_t(s)) / (1 - F_t(0)).
/// Throws Underflow when Q_t < 1e-300.
TruncatedSeries conditional_law_at_t(double t, const OffspringLaw& law, std::size_t order = 64,
                                     double tol = 1e-14);

/// E(e^{-theta X} | Z_t > 0) in the limit with X the normalised population:
/// 1 - (1 + theta^{-alpha})^{-1/alpha}; 1/(1 + theta) at alpha = 1.
double critical_laplace_limit(double theta, double alpha);

struct CriticalRow {
  double t = 0.0;
  double survival = 0.0;   // Q_t = 1 - F_t(0)
  double predicted = 0.0;  // 1/(b lambda t), or NaN when f''(1) is infinite
  double scaled = 0.0;     // Q_t b lambda t
};

struct CriticalLaplaceRow {
  double theta = 0.0;
  double value = 0.0;  // E(e^{-theta Q_t Z_t} | Z_t > 0) at the last grid time
  double limit = 0.0;
};

struct CriticalReport {
  std::optional<double> b;  // f''(1)/2 when finite
  double alpha = 1.0;
  std::vector<CriticalRow> rows;
  // Least-squares slope of ln Q_t against ln t; predicted -1/alpha.
  double fitted_slope = 0.0;
  std::vector<CriticalLaplaceRow> laplace;
};

/// Requires m = 1. The Laplace rows are evaluated at the last entry of t_grid.
CriticalReport critical_asymptotics(const PiEvaluator& pe, const std::vector<double>& t_grid,
                                    const std::vector<double>& thetas = {0.5, 1.0, 2.0});

struct AlphaZeroRow {
  double y = 0.0;
  double v = 0.0;           // V(y) = pi(1 - 1/y)
  double elongation = 0.0;  // V(2y) / V(y)
};

struct AlphaZeroReport {
  std::vector<AlphaZeroRow> rows;
  bool increasing = true;
  double v_at_one = 0.0;
};

/// V(y) on the grid for a critical tail-power law with alpha = 0.
AlphaZeroReport alpha_zero_profile(const PiEvaluator& pe, const std::vector<double>& y_grid);
/// Limit CDF 1 - e^{-x} of the normalised statistic V(Z_t) L(Q_t).
double alpha_zero_limit_cdf(double x);

struct RhoRow {
  double rho = 0.0;
  double laplace = 1.0;   // E e^{-rho W}
  double phi = 1.0;       // (E e^{-rho W} - q)/(1 - q), given survival
  double residual = 0.0;  // of the fixed-point equation
  int iterations = 0;
  bool bisected = false;
};

struct SupercriticalLimit {
  double q = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  // P(Z_t = k) ~ a_k gamma^t, k >= 1.
  TruncatedSeries a_coeffs;
  // Limit of E(s^{Z_t} | extinction), 1 - (1-s) e^{pi_q(sq)}.
  TruncatedSeries extinction_limit;
  std::vector<RhoRow> phi_table;
  // W = 0 almost surely when the x log x condition fails.
  bool degenerate = false;
};

/// Requires 1 < m < infinity.
SupercriticalLimit supercritical_local_limit(const PiEvaluator& pe, std::size_t order = 64);

/// Solves for E e^{-rho W} on the grid by damped iteration with a bracketing fallback.
SupercriticalLimit martingale_limit_transform(const PiEvaluator& pe,
                                              const std::vector<double>& rho_grid,
                                              double tol = 1e-12);

}  // namespace branchkit

#pragma once

// The integrals of 1/(f(x) - x) and their singularity-extracted companions
//
//   pi_q(s)        = int_0^s nabla_q^2 f / (1 - nabla_q f)
//   pi_r(s1, s2)   = int_{s1}^{s2} nabla_r^2 f / (nabla_r f - 1)
//   pi_rq(s)       = beta int_0^s nabla_r^2 nabla_q f / nabla_r nabla_q f
//   pi_qr(s)       = int_0^s nabla_r nabla_q^2 f / nabla_r nabla_q f
//
// with beta = (1 - f'(q)) / (f'(r) - 1).

#include <optional>
#include <utility>
#include <vector>

#include "branchkit/law.hpp"
#include "branchkit/series.hpp"

namespace branchkit {

class PiEvaluator {
 public:
  explicit PiEvaluator(OffspringLaw law, double tol = 1e-13);

  const OffspringLaw& law() const { return law_; }
  const FixedPoints& fixed_points() const { return fp_; }
  std::optional<double> beta() const { return beta_; }

  /// int_{s1}^{s2} dx / (f(x) - x) for s1, s2 on one side of q and below r.
  double pi_plain(double s1, double s2) const;
  double pi_q(double s) const;
  double pi_r(double s1, double s2) const;
  std::pair<double, double> pi_rq_qr(double s) const;

  /// int_a^b of the pi_q integrand (either order).
  double integral_q(double a, double b) const;
  /// The rq and qr integrals over [a, b].
  std::pair<double, double> integral_rq_qr(double a, double b) const;

  bool pi_q_at_q_finite() const { return pi_q_q_finite_; }
  bool pi_rq_at_r_finite() const { return pi_rq_r_finite_; }
  bool pi_qr_at_r_finite() const { return true; }
  /// pi_q(q); +inf when the integral diverges.
  double pi_q_at_q() const { return pi_q_q_; }
  /// pi_q(q) integrated up to 1 - e^{-700}, finite even when the full integral diverges.
  double pi_q_at_q_truncated() const { return pi_q_q_truncated_; }
  /// (pi_rq(r), pi_qr(r)); the first is +inf when it diverges.
  std::pair<double, double> pi_rq_qr_at_r() const { return pi_rqqr_r_; }

  enum class Kind { Q, R, RQ, QR };
  double integrand(Kind k, double x) const;
  /// The integrand at x = 1 - X, for roots at 1 where X may be below epsilon.
  double integrand_complement(Kind k, double X) const;
  /// int_{1 - X_hi}^{1 - X_lo} of the integrand, through u = ln(1/X).
  double complement_integral(Kind k, double X_lo, double X_hi) const;
  /// Signed int_a^b of the integrand; b may equal the root the kind is anchored at.
  double integral(Kind k, double a, double b) const;
  /// True when integrals reaching 1 go through complement_integral.
  bool uses_complement(Kind k) const;

 private:
  bool root_at_one(Kind k) const;
  // int_a^1, with the divergence signal from successive u-increments.
  double integral_to_one(Kind k, double a, bool& finite, double* truncated = nullptr) const;

  OffspringLaw law_;
  FixedPoints fp_;
  std::optional<double> beta_;
  double tol_;
  bool pi_q_q_finite_ = true;
  bool pi_rq_r_finite_ = true;
  double pi_q_q_ = 0.0;
  double pi_q_q_truncated_ = 0.0;
  std::pair<double, double> pi_rqqr_r_{0.0, 0.0};
  // Values at q used by the cancellation-free complement forms.
  double tail11_q_ = 0.0, tail1q_q_ = 0.0;
};

/// Residual of the refined form of the integral equation at (t, s), given F.
struct RefinedResidual {
  enum class Form { Critical, Subcritical, TwoRoot } form = Form::Critical;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

/// Critical laws: int_s^F dx / ((1-x)^2 nabla_1^2 f(x)) against lambda t.
/// One root: nabla_q F against gamma^t exp(-int_s^F pi_q integrand).
/// Two roots: nabla_q F against
///   gamma^t [nabla_r F]^beta exp(-(pi_rq(F) - pi_rq(s)) + (pi_qr(F) - pi_qr(s))).
/// F comes from the scalar ODE route unless supplied.
RefinedResidual refined_equation_residual(double t, double s, const PiEvaluator& pe,
                                   std::optional<double> F = std::nullopt);

/// x log x probe of the law at anchor a (n = 2), over the coefficient table
/// up to `budget` (or the full support of an explicit law).
MomentReport law_xlogx(const OffspringLaw& law, double a, std::size_t budget = 2048);

enum class Profile { Lq, Lrq };

struct ProfilePoint {
  double x = 0.0;
  double value = 0.0;       // L(x)
  double elongation = 0.0;  // L(2x) / L(x)
};

/// L_q(x) = e^{pi_q(q - x)} or L_rq(x) = e^{pi_rq(r - x)} on the grid.
std::vector<ProfilePoint> slowly_varying_profile(const PiEvaluator& pe, Profile which,
                                                 const std::vector<double>& grid);

}  // namespace branchkit

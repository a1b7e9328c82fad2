#include "branchkit/pifn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "branchkit/error.hpp"
#include "branchkit/evolve.hpp"
#include "branchkit/quadrature.hpp"

namespace branchkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Width of the band below 1 handled in u = ln(1/X) for tail-power laws.
constexpr double kBand = 1e-3;
// Distance from a root below which pi_plain switches to the extracted forms.
constexpr double kRawGap = 1e-3;
constexpr double kUMax = 700.0;

}  // namespace

PiEvaluator::PiEvaluator(OffspringLaw law, double tol)
    : law_(std::move(law)), fp_(branchkit::fixed_points(law_)), tol_(tol) {
  if (!std::isfinite(fp_.mean))
    fail(ErrorCode::Unsupported, "pi functions need a finite offspring mean");
  beta_ = branchkit::beta(law_, fp_);
  const double q = fp_.q;
  if (fp_.r && *fp_.r == 1.0) {
    tail11_q_ = law_.dd({1.0, 1.0}, q);
    tail1q_q_ = law_.dd({1.0, q}, q);
  }
  if (fp_.regime == Regime::Critical) return;
  if (q < 1.0) {
    pi_q_q_ = pi_q_q_truncated_ = integral(Kind::Q, 0.0, q);
  } else {
    pi_q_q_ = integral_to_one(Kind::Q, 0.0, pi_q_q_finite_, &pi_q_q_truncated_);
  }
  if (fp_.r) {
    const double r = *fp_.r;
    double rq = 0.0;
    if (r == 1.0) {
      rq = integral_to_one(Kind::RQ, 0.0, pi_rq_r_finite_);
    } else {
      rq = integral(Kind::RQ, 0.0, r);
    }
    pi_rqqr_r_ = {rq, integral(Kind::QR, 0.0, r)};
  }
}

bool PiEvaluator::root_at_one(Kind k) const {
  if (k == Kind::Q) return fp_.q == 1.0 && !fp_.r;
  return fp_.r && *fp_.r == 1.0;
}

bool PiEvaluator::uses_complement(Kind k) const {
  return law_.kind() == LawKind::TailPower && root_at_one(k);
}

double PiEvaluator::integrand(Kind k, double x) const {
  const double q = fp_.q;
  switch (k) {
    case Kind::Q:
      return law_.dd({q, q}, x) / drift(law_, fp_, q, x);
    case Kind::R: {
      const double r = *fp_.r;
      return law_.dd({r, r}, x) / ((x - q) * law_.dd({q, r}, x));
    }
    case Kind::RQ: {
      const double r = *fp_.r;
      return *beta_ * law_.dd({r, r, q}, x) / law_.dd({q, r}, x);
    }
    case Kind::QR: {
      const double r = *fp_.r;
      return law_.dd({r, q, q}, x) / law_.dd({q, r}, x);
    }
  }
  return 0.0;
}

double PiEvaluator::integrand_complement(Kind k, double X) const {
  if (!root_at_one(k)) return integrand(k, 1.0 - X);
  const double t1 = law_.tail_at_complement(1, X);
  const double t2 = law_.tail_at_complement(2, X);
  if (k == Kind::Q) return t2 / (1.0 - t1);
  // r = 1, so nabla_1 f(q) = 1 exactly.
  const double xq = (1.0 - fp_.q) - X;
  const double d1q = (t1 - 1.0) / xq;
  switch (k) {
    case Kind::R: return t2 / (xq * d1q);
    case Kind::RQ: return *beta_ * (t2 - tail11_q_) / xq / d1q;
    case Kind::QR: return (d1q - tail1q_q_) / xq / d1q;
    default: return 0.0;
  }
}

double PiEvaluator::complement_integral(Kind k, double X_lo, double X_hi) const {
  if (X_hi <= X_lo) return 0.0;
  const double u_lo = -std::log(X_hi);
  const double u_hi = X_lo > 0.0 ? -std::log(X_lo) : kUMax;
  auto g = [&](double u) {
    const double X = std::exp(-u);
    return integrand_complement(k, X) * X;
  };
  return gauss_kronrod(g, u_lo, u_hi, tol_, 1e-12, 4000).value;
}

double PiEvaluator::integral(Kind k, double a, double b) const {
  if (a == b) return 0.0;
  if (a > b) return -integral(k, b, a);
  if (uses_complement(k) && b > 1.0 - kBand) {
    if (b >= 1.0) {
      bool finite = true;
      return integral_to_one(k, a, finite);
    }
    const double c = std::max(a, 1.0 - kBand);
    double total = complement_integral(k, 1.0 - b, 1.0 - c);
    if (a < c) total += integral(k, a, c);
    return total;
  }
  auto g = [&](double x) { return integrand(k, x); };
  const double q = fp_.q;
  if (a < q && q < b)
    return gauss_kronrod(g, a, q, tol_, 1e-12, 2000).value +
           gauss_kronrod(g, q, b, tol_, 1e-12, 2000).value;
  return gauss_kronrod(g, a, b, tol_, 1e-12, 2000).value;
}

double PiEvaluator::integral_to_one(Kind k, double a, bool& finite, double* truncated) const {
  finite = true;
  if (!uses_complement(k)) {
    const double v = integral(k, a, 1.0);
    if (truncated) *truncated = v;
    return v;
  }
  const double c = std::max(a, 1.0 - kBand);
  double total = a < c ? integral(k, a, c) : 0.0;
  // Increments over [u/4, u/2] and [u/2, u]: a logarithmically divergent
  // integrand gives equal increments, a convergent one shrinking ones.
  const double u0 = -std::log(1.0 - c);
  const double u1 = std::max(u0, kUMax / 4), u2 = kUMax / 2;
  total += complement_integral(k, std::exp(-u1), 1.0 - c);
  const double inc1 = complement_integral(k, std::exp(-u2), std::exp(-u1));
  const double inc2 = complement_integral(k, 0.0, std::exp(-u2));
  total += inc1 + inc2;
  if (truncated) *truncated = total;
  if (std::abs(inc1) > 0.0) {
    const double ratio = std::abs(inc2 / inc1);
    if (ratio > 0.8) {
      finite = false;
      return kInf;
    }
    total += inc2 * ratio / (1.0 - ratio);
  }
  return total;
}

double PiEvaluator::integral_q(double a, double b) const {
  if (fp_.regime == Regime::Critical) fail(ErrorCode::Domain, "pi_q is undefined for a critical law");
  return integral(Kind::Q, a, b);
}

std::pair<double, double> PiEvaluator::integral_rq_qr(double a, double b) const {
  if (!fp_.r) fail(ErrorCode::Domain, "pi_rq and pi_qr need a second root");
  return {integral(Kind::RQ, a, b), integral(Kind::QR, a, b)};
}

double PiEvaluator::pi_plain(double s1, double s2) const {
  if (s1 == s2) return 0.0;
  const double lo = std::min(s1, s2), hi = std::max(s1, s2);
  const double sign = s1 < s2 ? 1.0 : -1.0;
  if (lo < 0.0) fail(ErrorCode::Domain, "pi needs arguments >= 0");
  const double q = fp_.q;

  if (fp_.regime == Regime::Critical) {
    if (hi >= 1.0) fail(ErrorCode::Domain, "pi diverges at the critical root");
    // y = 1/(1-x): int dy / nabla_1^2 f(1 - 1/y).
    auto g = [&](double y) { return 1.0 / law_.tail_at_complement(2, 1.0 / y); };
    return sign * gauss_kronrod(g, 1.0 / (1.0 - lo), 1.0 / (1.0 - hi), tol_, 1e-12, 2000).value;
  }
  if (lo < q && hi > q) fail(ErrorCode::Domain, "pi interval straddles q");
  if (lo == q || hi == q) fail(ErrorCode::Domain, "pi diverges at q");
  if (hi > q && !fp_.r) fail(ErrorCode::Domain, "no second root above q");
  if (fp_.r && hi >= *fp_.r) fail(ErrorCode::Domain, "pi diverges at r");

  const double d = drift(law_, fp_, q, q);  // 1 - f'(q)
  auto raw = [&](double a, double b) {
    auto g = [&](double x) { return 1.0 / ((q - x) * drift(law_, fp_, q, x)); };
    return gauss_kronrod(g, a, b, tol_, 1e-12, 2000).value;
  };
  // int_a^b dx/(f - x) near q and near r respectively.
  auto q_form = [&](double a, double b) {
    return (std::log((q - a) / (q - b)) - integral(Kind::Q, a, b)) / d;
  };
  auto r_form = [&](double a, double b) {
    const double r = *fp_.r;
    const double e = law_.derivative(r) - 1.0;
    return -(std::log((r - a) / (r - b)) + integral(Kind::R, a, b)) / e;
  };

  if (hi < q) {
    if (q - hi >= kRawGap) return sign * raw(lo, hi);
    return sign * q_form(lo, hi);
  }
  const double r = *fp_.r;
  if (lo - q >= kRawGap && r - hi >= kRawGap) return sign * raw(lo, hi);
  const double xm = 0.5 * (q + r);
  double total = 0.0;
  if (lo < xm) total += q_form(lo, std::min(hi, xm));
  if (hi > xm) total += r_form(std::max(lo, xm), hi);
  return sign * total;
}

double PiEvaluator::pi_q(double s) const {
  if (fp_.regime == Regime::Critical) fail(ErrorCode::Domain, "pi_q is undefined for a critical law");
  if (s < 0.0) fail(ErrorCode::Domain, "pi_q needs s >= 0");
  if (fp_.r ? s >= *fp_.r : s > 1.0) fail(ErrorCode::Domain, "pi_q needs s below r");
  if (fp_.q == 1.0 && s == 1.0 && !fp_.r) return pi_q_q_;
  return integral(Kind::Q, 0.0, s);
}

double PiEvaluator::pi_r(double s1, double s2) const {
  if (!fp_.r) fail(ErrorCode::Domain, "pi_r needs a second root");
  const double q = fp_.q, r = *fp_.r;
  if (!(s1 > q && s2 > q && s1 <= r && s2 <= r)) fail(ErrorCode::Domain, "pi_r needs arguments in (q, r]");
  return integral(Kind::R, s1, s2);
}

std::pair<double, double> PiEvaluator::pi_rq_qr(double s) const {
  if (!fp_.r) fail(ErrorCode::Domain, "pi_rq and pi_qr need a second root");
  if (!(s >= 0.0 && s <= *fp_.r)) fail(ErrorCode::Domain, "pi_rq needs s in [0, r]");
  if (s == *fp_.r) return pi_rqqr_r_;
  return integral_rq_qr(0.0, s);
}

RefinedResidual refined_equation_residual(double t, double s, const PiEvaluator& pe,
                                   std::optional<double> F) {
  const OffspringLaw& law = pe.law();
  const FixedPoints& fp = pe.fixed_points();
  if (!(t >= 0.0)) fail(ErrorCode::Domain, "time must be non-negative");
  if (!(s >= 0.0 && s < 1.0)) fail(ErrorCode::Domain, "residual needs s in [0, 1)");
  const double q = fp.q;
  RefinedResidual out;

  double value = 0.0, complement = 0.0;
  std::optional<Evolver> ev;
  if (F) {
    value = *F;
    complement = 1.0 - *F;
  } else {
    ev.emplace(law);
    const EvolveResult res = ev->scalar(t, s);
    value = res.value;
    complement = res.complement;
  }

  if (fp.regime == Regime::Critical) {
    out.form = RefinedResidual::Form::Critical;
    auto g = [&](double y) { return 1.0 / law.tail_at_complement(2, 1.0 / y); };
    out.lhs = s == value ? 0.0 : gauss_kronrod(g, 1.0 / (1.0 - s), 1.0 / complement, 1e-14, 1e-13, 2000).value;
    out.rhs = law.lambda() * t;
    out.residual = std::abs(out.lhs - out.rhs);
    return out;
  }

  // nabla_q F_t(s) = (F - q)/(s - q); near q from the expansion of F_t about q.
  if (std::abs(s - q) < 1e-6) {
    if (!ev) ev.emplace(law);
    const EvolveResult ser = ev->series(t, 24, 1e-13, q);
    double acc = 0.0;
    for (std::size_t k = ser.coeffs.size(); k-- > 1;) acc = acc * (s - q) + ser.coeffs[k];
    out.lhs = acc;
  } else if (q == 1.0) {
    out.lhs = complement / (1.0 - s);
  } else if (s < q) {
    out.lhs = (q - value) / (q - s);
  } else {
    out.lhs = ((1.0 - q) - complement) / (s - q);
  }
  const double gamma_t = std::exp(fp.gamma_exponent * t);

  if (!fp.r) {
    out.form = RefinedResidual::Form::Subcritical;
    out.rhs = gamma_t * std::exp(-pe.integral_q(s, value));
  } else {
    out.form = RefinedResidual::Form::TwoRoot;
    const double r = *fp.r;
    const double nabla_r = r == 1.0 ? complement / (1.0 - s) : (r - value) / (r - s);
    const auto [rq, qr] = pe.integral_rq_qr(s, value);
    out.rhs = gamma_t * std::pow(nabla_r, *pe.beta()) * std::exp(-rq + qr);
  }
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

std::vector<ProfilePoint> slowly_varying_profile(const PiEvaluator& pe, Profile which,
                                                 const std::vector<double>& grid) {
  const FixedPoints& fp = pe.fixed_points();
  using Kind = PiEvaluator::Kind;
  Kind k = Kind::Q;
  double root = fp.q;
  if (which == Profile::Lq) {
    if (fp.regime == Regime::Critical) fail(ErrorCode::Domain, "L_q is undefined for a critical law");
  } else {
    if (!fp.r) fail(ErrorCode::Domain, "L_rq needs a second root");
    k = Kind::RQ;
    root = *fp.r;
  }
  const bool comp = pe.uses_complement(k);
  // int_{root - x2}^{root - x1} of the integrand.
  auto band = [&](double x1, double x2) {
    if (comp && x2 <= kBand) return pe.complement_integral(k, x1, x2);
    if (comp && x1 < kBand) return pe.complement_integral(k, x1, kBand) + pe.integral(k, root - x2, 1.0 - kBand);
    return pe.integral(k, root - x2, root - x1);
  };
  std::vector<ProfilePoint> out;
  out.reserve(grid.size());
  for (double x : grid) {
    if (!(x > 0.0) || 2.0 * x > root) fail(ErrorCode::Domain, "profile grid must lie in (0, root/2]");
    ProfilePoint p;
    p.x = x;
    const double below = comp && x < kBand
                             ? pe.integral(k, 0.0, 1.0 - kBand) + pe.complement_integral(k, x, kBand)
                             : pe.integral(k, 0.0, root - x);
    p.value = std::exp(below);
    p.elongation = std::exp(-band(x, 2.0 * x));
    out.push_back(p);
  }
  return out;
}

MomentReport law_xlogx(const OffspringLaw& law, double a, std::size_t budget) {
  std::size_t n = budget;
  if (law.kind() == LawKind::Explicit) n = std::max(n, law.spec().probs.size());
  return xlogx_diagnostic(law.coefficients(n), a, 2, n);
}

}  // namespace branchkit

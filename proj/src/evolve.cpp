#include "branchkit/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "branchkit/error.hpp"
#include "branchkit/ode.hpp"
#include "branchkit/quadrature.hpp"

namespace branchkit {

namespace {

constexpr double kNearFixed = 1e-10;

template <class F>
double solve_bracketed(F&& fn, double lo, double hi, double flo, double fhi) {
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  boost::uintmax_t iters = 300;
  auto [a, b] = boost::math::tools::toms748_solve(
      fn, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (a + b);
}

}  // namespace

const char* to_string(Route r) noexcept {
  switch (r) {
    case Route::ODE: return "ode";
    case Route::SeriesODE: return "series-ode";
    case Route::IntegralInversion: return "integral-inversion";
  }
  return "?";
}

double population_mean(double t, const OffspringLaw& law) {
  return std::exp(law.lambda() * (law.mean() - 1.0) * t);
}

Evolver::Evolver(OffspringLaw law) : law_(std::move(law)), fp_(branchkit::fixed_points(law_)) {
  if (!std::isfinite(fp_.mean))
    fail(ErrorCode::Unsupported, "evolution requires a finite offspring mean");
}

double drift(const OffspringLaw& law, const FixedPoints& fp, double a, double x) {
  if (fp.regime == Regime::Critical) return (1.0 - x) * law.dd({1.0, 1.0}, x);
  std::optional<double> other;
  if (fp.r) {
    if (a == fp.q) other = *fp.r;
    else if (a == *fp.r) other = fp.q;
  }
  // 1 - nabla_a f(x) = nabla_a f(b) - nabla_a f(x) = (b - x) nabla_a nabla_b f(x).
  if (other) return (*other - x) * law.dd({a, *other}, x);
  return 1.0 - law.dd({a}, x);
}

double Evolver::drift(double a, double x) const { return branchkit::drift(law_, fp_, a, x); }

Evolver::Anchor Evolver::anchor_for(double s) const {
  const double a = s < fp_.q ? fp_.q : 1.0;
  return {a, s < a ? -1.0 : 1.0};
}

EvolveResult Evolver::run_scalar(std::span<const double> times, Anchor an, double w0, double tol,
                                 std::vector<EvolveResult>& out) const {
  const double lambda = law_.lambda();
  auto finish = [&](double t, double w, double err) {
    EvolveResult r;
    r.t = t;
    r.value = an.a + an.sign * w;
    r.complement = an.a == 1.0 ? -an.sign * w : (1.0 - an.a) - an.sign * w;
    r.error_estimate = err;
    r.route = Route::ODE;
    return r;
  };
  if (w0 == 0.0) {
    for (double t : times) out.push_back(finish(t, 0.0, 0.0));
    return out.back();
  }
  OdeRhs rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    const double x = an.a + an.sign * std::exp(y[0]);
    dy[0] = -lambda * drift(an.a, x);
  };
  OdeOptions opts;
  opts.abs_tol = tol;
  opts.rel_tol = 0.0;
  OdeResult res = dormand_prince(rhs, {std::log(w0)}, 0.0, times, opts);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double w = std::exp(res.states[i][0]);
    out.push_back(finish(times[i], w, w * (res.error_estimate + 4.0 * tol) + 1e-16));
  }
  return out.back();
}

EvolveResult Evolver::scalar(double t, double s, double tol) const {
  const double times[1] = {t};
  auto r = scalar(times, s, tol);
  return r.front();
}

std::vector<EvolveResult> Evolver::scalar(std::span<const double> times, double s,
                                          double tol) const {
  if (!std::isfinite(s) || s < 0.0) fail(ErrorCode::Domain, "F_t(s) needs s >= 0");
  if (law_.radius() && s >= *law_.radius()) fail(ErrorCode::Domain, "s beyond the radius of f");
  for (double t : times)
    if (!(t >= 0.0)) fail(ErrorCode::Domain, "time must be non-negative");
  std::vector<EvolveResult> out;
  if (std::abs(s - fp_.q) < kNearFixed) {
    for (double t : times) {
      EvolveResult r;
      r.t = t;
      r.s = s;
      r.value = fp_.q;
      r.complement = 1.0 - fp_.q;
      out.push_back(r);
    }
    return out;
  }
  const Anchor an = anchor_for(s);
  if (fp_.r && s > *fp_.r) fail(ErrorCode::Domain, "F_t(s) explodes for s above r");
  run_scalar(times, an, std::abs(s - an.a), tol, out);
  for (auto& r : out) r.s = s;
  return out;
}

EvolveResult Evolver::scalar_near_one(double t, double one_minus_s, double tol) const {
  if (!(one_minus_s >= 0.0) || one_minus_s > 1.0) fail(ErrorCode::Domain, "1 - s must lie in [0, 1]");
  const double s = 1.0 - one_minus_s;
  if (s < fp_.q || std::abs(s - fp_.q) < kNearFixed) return scalar(t, s, tol);
  std::vector<EvolveResult> out;
  const double times[1] = {t};
  run_scalar(times, {1.0, -1.0}, one_minus_s, tol, out);
  out.front().s = s;
  return out.front();
}

EvolveResult Evolver::raw(double t, double s, double tol) const {
  const double lambda = law_.lambda();
  OdeRhs rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = lambda * (law_.pgf(y[0]) - y[0]);
  };
  OdeOptions opts;
  opts.abs_tol = tol;
  opts.rel_tol = tol;
  const double times[1] = {t};
  OdeResult res = dormand_prince(rhs, {s}, 0.0, times, opts);
  EvolveResult r;
  r.t = t;
  r.s = s;
  r.value = res.states[0][0];
  r.complement = 1.0 - r.value;
  r.error_estimate = res.error_estimate;
  r.route = Route::ODE;
  return r;
}

std::vector<EvolveResult> Evolver::series(std::span<const double> times, std::size_t order,
                                          double tol, double center) const {
  if (order < 1) fail(ErrorCode::DegenerateInput, "series route needs order >= 1");
  const Anchor an = anchor_for(center);
  const double w0 = std::abs(center - an.a);
  const bool frozen = w0 < kNearFixed;
  const double lambda = law_.lambda();
  const std::size_t n = order;

  std::vector<double> y0(n + 1, 0.0);
  y0[0] = frozen ? 0.0 : std::log(w0);
  y0[1] = 1.0;
  std::vector<double> c(n + 1);
  OdeRhs rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    c[0] = frozen ? an.a : an.a + an.sign * std::exp(y[0]);
    for (std::size_t k = 1; k <= n; ++k) c[k] = y[k];
    dy[0] = frozen ? 0.0 : -lambda * drift(an.a, c[0]);
    const std::vector<double> fc = law_.compose(c, n);
    for (std::size_t k = 1; k <= n; ++k) dy[k] = lambda * (fc[k] - y[k]);
  };
  OdeOptions opts;
  opts.abs_tol = 1e-3 * tol;
  opts.rel_tol = tol;
  OdeResult res = dormand_prince(rhs, y0, 0.0, times, opts);

  std::vector<EvolveResult> out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    EvolveResult r;
    r.t = times[i];
    r.s = center;
    r.order = n;
    r.route = Route::SeriesODE;
    r.coeffs = res.states[i];
    const double w = frozen ? 0.0 : std::exp(r.coeffs[0]);
    r.coeffs[0] = an.a + an.sign * w;
    r.value = r.coeffs[0];
    r.complement = an.a == 1.0 ? -an.sign * w : (1.0 - an.a) - an.sign * w;
    r.error_estimate = res.error_estimate;
    out.push_back(std::move(r));
  }
  return out;
}

EvolveResult Evolver::series(double t, std::size_t order, double tol, double center) const {
  const double times[1] = {t};
  return series(times, order, tol, center).front();
}

EvolveResult Evolver::series_value(double t, double s, double tol, std::size_t max_order) const {
  if (!(s >= 0.0 && s <= 1.0)) fail(ErrorCode::Domain, "series evaluation needs s in [0, 1]");
  EvolveResult best;
  for (std::size_t n = 64;; n *= 2) {
    EvolveResult r = series(t, n, 1e-2 * tol);
    double value = 0.0;
    for (std::size_t k = r.coeffs.size(); k-- > 0;) value = value * s + r.coeffs[k];
    // Geometric extrapolation of the dropped tail from the last coefficients.
    double ratio = 0.0;
    for (std::size_t k = n - 7; k <= n; ++k)
      if (r.coeffs[k - 1] != 0.0) ratio = std::max(ratio, std::abs(r.coeffs[k] / r.coeffs[k - 1]));
    double tail = 0.0;
    if (s > 0.0) {
      const double rs = ratio * s;
      tail = rs < 1.0 ? std::abs(r.coeffs[n]) * std::pow(s, double(n)) * rs / (1.0 - rs)
                      : std::numeric_limits<double>::infinity();
    }
    best = r;
    best.s = s;
    best.value = value;
    best.complement = 1.0 - value;
    best.error_estimate = tail + r.error_estimate;
    if (tail < tol || 2 * n > max_order) break;
  }
  return best;
}

EvolveResult Evolver::integral_inverse(double t, double s, double tol) const {
  if (!(t >= 0.0)) fail(ErrorCode::Domain, "time must be non-negative");
  if (!(s >= 0.0 && s <= 1.0)) fail(ErrorCode::Domain, "integral inversion needs s in [0, 1]");
  EvolveResult r;
  r.t = t;
  r.s = s;
  r.route = Route::IntegralInversion;
  const double q = fp_.q;
  const double lt = law_.lambda() * t;
  const double qa = 1e-3 * tol, qr = 1e-3 * tol;
  auto done = [&](double value, double complement, double err) {
    r.value = value;
    r.complement = complement;
    r.error_estimate = err;
    return r;
  };
  if (lt == 0.0 || s == 1.0) return done(s, 1.0 - s, 0.0);
  if (std::abs(s - q) < kNearFixed) return done(q, 1.0 - q, 0.0);

  if (fp_.regime == Regime::Critical) {
    // y = 1/(1-x) turns the double pole at 1 into int dy / nabla_1^2 f(1 - 1/y).
    auto inv_g2 = [&](double y) { return 1.0 / law_.dd({1.0, 1.0}, 1.0 - 1.0 / y); };
    const double ys = 1.0 / (1.0 - s);
    double qerr = 0.0;
    auto h = [&](double y) {
      QuadResult qr_ = gauss_kronrod(inv_g2, ys, y, qa, qr, 2000);
      qerr = qr_.error;
      return qr_.value - lt;
    };
    double hi = ys + lt * law_.dd({1.0, 1.0}, s);
    double fhi = h(hi);
    while (fhi < 0.0) {
      hi = ys + 2.0 * (hi - ys);
      fhi = h(hi);
    }
    const double y = solve_bracketed(h, ys, hi, -lt, fhi);
    return done(1.0 - 1.0 / y, 1.0 / y, 1e-14 + qerr * law_.dd({1.0, 1.0}, 1.0 - 1.0 / y) / (y * y));
  }

  const double dq = drift(q, q);  // 1 - f'(q)
  auto iq = [&](double x) { return law_.dd({q, q}, x) / drift(q, x); };

  if (s < q) {
    double qerr = 0.0;
    auto phi = [&](double F) {
      QuadResult res = gauss_kronrod(iq, s, F, qa, qr, 2000);
      qerr = res.error;
      return std::log((q - s) / (q - F)) - res.value - lt * dq;
    };
    double k = lt * dq + 1.0;
    double hi = q - (q - s) * std::exp(-k);
    double fhi = phi(hi);
    while (fhi < 0.0) {
      k += 2.0;
      hi = q - (q - s) * std::exp(-k);
      fhi = phi(hi);
    }
    const double F = solve_bracketed(phi, s, hi, -lt * dq, fhi);
    return done(F, 1.0 - F, (q - F) * qerr + 1e-14);
  }

  if (q >= 1.0) fail(ErrorCode::Domain, "integral inversion above q needs a supercritical law");
  // Upper branch of a supercritical law: split (q, 1) at its midpoint and
  // extract the pole at q below it and the pole at 1 above it.
  const double m1 = fp_.mean - 1.0;
  const double xm = 0.5 * (q + 1.0);
  auto i1 = [&](double x) { return law_.dd({1.0, 1.0}, x) / -drift(1.0, x); };
  double qerr = 0.0;
  auto J = [&](double F) {
    double total = 0.0;
    const double v = std::min(s, xm);
    if (F < v) {
      QuadResult res = gauss_kronrod(iq, F, v, qa, qr, 2000);
      qerr = res.error;
      total += (std::log((v - q) / (F - q)) + res.value) / dq;
    }
    const double u = std::max(F, xm);
    if (u < s) {
      QuadResult res = gauss_kronrod(i1, u, s, qa, qr, 2000);
      qerr += res.error;
      total += (std::log((1.0 - u) / (1.0 - s)) + res.value) / m1;
    }
    return total - lt;
  };
  double k = 1.0 + lt * std::max(dq, m1);
  double lo = q + (s - q) * std::exp(-k);
  double flo = J(lo);
  while (flo < 0.0) {
    k += 2.0;
    lo = q + (s - q) * std::exp(-k);
    flo = J(lo);
  }
  const double F = solve_bracketed(J, lo, s, flo, -lt);
  return done(F, 1.0 - F, qerr + 1e-14);
}

EvolveResult scalar_F(double t, double s, const OffspringLaw& law, double tol) {
  return Evolver(law).scalar(t, s, tol);
}

EvolveResult series_F(double t, std::size_t order, const OffspringLaw& law, double tol) {
  return Evolver(law).series(t, order, tol);
}

EvolveResult integral_inverse(double t, double s, const OffspringLaw& law, double tol) {
  return Evolver(law).integral_inverse(t, s, tol);
}

RegularityReport regularity(const OffspringLaw& law) {
  RegularityReport rep;
  rep.finite_mean = std::isfinite(law.mean());
  if (rep.finite_mean) {
    rep.regular = true;
    rep.integral = std::numeric_limits<double>::infinity();
    return rep;
  }
  // x - f(x) = (1 - x)(nabla_1 f(x) - 1); with u = ln(1/(1-x)) the integral
  // becomes int du / (nabla_1 f(1 - e^{-u}) - 1).
  double u0 = 0.0;
  while (law.tail_at_complement(1, std::exp(-u0)) <= 1.0) {
    u0 += 0.5;
    if (u0 > 700.0) fail(ErrorCode::Convergence, "regularity probe found no start point");
  }
  auto g = [&](double u) { return 1.0 / (law.tail_at_complement(1, std::exp(-u)) - 1.0); };
  rep.eps = std::exp(-u0);
  const double half = integrate(g, u0, u0 + 350.0, 1e-14, 1e-12, 4000);
  const double full = half + integrate(g, u0 + 350.0, u0 + 700.0, 1e-14, 1e-12, 4000);
  rep.regular = (full - half) > 1e-6 * std::max(1.0, full);
  rep.integral = rep.regular ? std::numeric_limits<double>::infinity() : full;
  return rep;
}

}  // namespace branchkit

#include "branchkit/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "branchkit/error.hpp"
#include "branchkit/evolve.hpp"
#include "branchkit/quadrature.hpp"
#include "branchkit/series_ops.hpp"

namespace branchkit {

namespace {

using Coeffs = std::vector<double>;

// Coefficients of pi_a(s) = int_0^s nabla_a^2 f / (1 - nabla_a f).
Coeffs pi_series(const OffspringLaw& law, double a, std::size_t n) {
  const double aa[2] = {a, a};
  const Coeffs num = law.dd_series(std::span<const double>(aa, 2), n);
  Coeffs den = law.dd_series(std::span<const double>(aa, 1), n);
  for (double& v : den) v = -v;
  den[0] += 1.0;
  return ops::integrate(ops::divide(num, den, n), n);
}

// 1 - (1 - s) e^{P(s)}.
Coeffs one_minus_times_exp(const Coeffs& P, std::size_t n) {
  const Coeffs E = ops::exp(P, n);
  Coeffs out(n + 1);
  out[0] = 1.0 - E[0];
  for (std::size_t k = 1; k <= n; ++k) out[k] = E[k - 1] - E[k];
  return out;
}

double mass_gap(const Coeffs& c) {
  double sum = 0.0;
  for (double v : c) sum += v;
  return std::max(0.0, 1.0 - sum);
}

}  // namespace

SubcriticalLimit subcritical_limit(const PiEvaluator& pe, std::size_t order) {
  const FixedPoints& fp = pe.fixed_points();
  if (!(fp.q == 1.0 && fp.mean < 1.0)) fail(ErrorCode::Domain, "subcritical limit needs m < 1");
  SubcriticalLimit out;
  out.pi_1_at_1 = pe.pi_q_at_q();
  out.pi_signal_diverging = !pe.pi_q_at_q_finite();
  out.xlogx_signal_diverging = law_xlogx(pe.law(), 1.0).sum_verdict == Verdict::Diverging;
  if (out.pi_signal_diverging && out.xlogx_signal_diverging)
    out.c = 0.0;
  else
    out.c = std::exp(-pe.pi_q_at_q_truncated());
  Coeffs psi = one_minus_times_exp(pi_series(pe.law(), 1.0, order), order);
  const double gap = mass_gap(psi);
  out.psi = TruncatedSeries(std::move(psi), std::nullopt, gap);
  return out;
}

TruncatedSeries conditional_law_at_t(double t, const OffspringLaw& law, std::size_t order, double tol) {
  const EvolveResult r = Evolver(law).series(t, order, tol);
  const double Q = r.complement;
  if (!(Q >= 1e-300)) fail(ErrorCode::Underflow, "survival probability below 1e-300");
  Coeffs c(order + 1, 0.0);
  for (std::size_t k = 1; k <= order; ++k) c[k] = r.coeffs[k] / Q;
  const double gap = mass_gap(c);
  return TruncatedSeries(std::move(c), std::nullopt, gap);
}

double critical_laplace_limit(double theta, double alpha) {
  return 1.0 - std::pow(1.0 + std::pow(theta, -alpha), -1.0 / alpha);
}

CriticalReport critical_asymptotics(const PiEvaluator& pe, const std::vector<double>& t_grid,
                                    const std::vector<double>& thetas) {
  const OffspringLaw& law = pe.law();
  if (pe.fixed_points().regime != Regime::Critical)
    fail(ErrorCode::Domain, "critical asymptotics need m = 1");
  CriticalReport rep;
  const double b = law.tail_at_complement(2, 0.0);
  if (std::isfinite(b) && b > 0.0) rep.b = b;
  if (law.kind() == LawKind::TailPower) rep.alpha = law.spec().alpha;
  const Evolver ev(law);
  const double lambda = law.lambda();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double t : t_grid) {
    CriticalRow row;
    row.t = t;
    row.survival = ev.scalar(t, 0.0).complement;
    row.predicted = rep.b ? 1.0 / (*rep.b * lambda * t) : std::numeric_limits<double>::quiet_NaN();
    row.scaled = rep.b ? row.survival * *rep.b * lambda * t : std::numeric_limits<double>::quiet_NaN();
    rep.rows.push_back(row);
    if (t > 0.0) {
      const double x = std::log(t), y = std::log(row.survival);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
  }
  const double n = static_cast<double>(std::count_if(t_grid.begin(), t_grid.end(), [](double t) { return t > 0.0; }));
  if (n >= 2) rep.fitted_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (!t_grid.empty() && !thetas.empty()) {
    const double t = t_grid.back();
    const double Q = rep.rows.back().survival;
    for (double theta : thetas) {
      CriticalLaplaceRow row;
      row.theta = theta;
      const double one_minus_s = -std::expm1(-theta * Q);
      row.value = 1.0 - ev.scalar_near_one(t, one_minus_s).complement / Q;
      row.limit = critical_laplace_limit(theta, rep.alpha);
      rep.laplace.push_back(row);
    }
  }
  return rep;
}

AlphaZeroReport alpha_zero_profile(const PiEvaluator& pe, const std::vector<double>& y_grid) {
  const OffspringLaw& law = pe.law();
  if (law.kind() != LawKind::TailPower || law.spec().alpha != 0.0)
    fail(ErrorCode::Domain, "V(y) machinery needs a tail-power law with alpha = 0");
  if (pe.fixed_points().regime != Regime::Critical) fail(ErrorCode::Domain, "V(y) machinery needs m = 1");
  // V(y) = int_1^y dz / nabla_1^2 f(1 - 1/z), and with z = e^u the integrand
  // is 1 / (X nabla_1^2 f(1 - X)) at X = e^{-u}.
  auto g = [&](double u) {
    const double X = std::exp(-u);
    return 1.0 / (X * law.tail_at_complement(2, X));
  };
  auto V = [&](double y) {
    if (y == 1.0) return 0.0;
    return gauss_kronrod(g, 0.0, std::log(y), 1e-13, 1e-12, 2000).value;
  };
  AlphaZeroReport rep;
  rep.v_at_one = V(1.0);
  double prev = -std::numeric_limits<double>::infinity();
  double prev_y = 0.0;
  for (double y : y_grid) {
    if (!(y >= 1.0)) fail(ErrorCode::Domain, "V(y) needs y >= 1");
    AlphaZeroRow row;
    row.y = y;
    row.v = V(y);
    const double v2 = V(2.0 * y);
    row.elongation = row.v > 0.0 ? v2 / row.v : std::numeric_limits<double>::quiet_NaN();
    if (y > prev_y && !(row.v > prev)) rep.increasing = false;
    prev = row.v;
    prev_y = y;
    rep.rows.push_back(row);
  }
  return rep;
}

double alpha_zero_limit_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); }

SupercriticalLimit supercritical_local_limit(const PiEvaluator& pe, std::size_t order) {
  const FixedPoints& fp = pe.fixed_points();
  if (fp.regime != Regime::Supercritical) fail(ErrorCode::Domain, "local limit needs 1 < m < inf");
  SupercriticalLimit out;
  out.q = fp.q;
  out.gamma = fp.gamma();
  out.beta = *pe.beta();
  out.degenerate = !pe.pi_rq_at_r_finite();
  const double q = fp.q;
  const Coeffs P = pi_series(pe.law(), q, order);
  const Coeffs E = ops::exp(P, order);
  // e^{-pi_q(q)} [q + (s - q) e^{pi_q(s)}]
  const double scale = std::exp(-pe.pi_q_at_q());
  Coeffs a(order + 1);
  a[0] = scale * (q - q * E[0]);
  for (std::size_t k = 1; k <= order; ++k) a[k] = scale * (E[k - 1] - q * E[k]);
  out.a_coeffs = TruncatedSeries(std::move(a), 1.0, std::numeric_limits<double>::infinity());
  Coeffs Pq = P;
  ops::rescale(Pq, q);
  Coeffs ext = one_minus_times_exp(Pq, order);
  const double gap = mass_gap(ext);
  out.extinction_limit = TruncatedSeries(std::move(ext), std::nullopt, gap);
  return out;
}

SupercriticalLimit martingale_limit_transform(const PiEvaluator& pe,
                                              const std::vector<double>& rho_grid, double tol) {
  const FixedPoints& fp = pe.fixed_points();
  if (fp.regime != Regime::Supercritical) fail(ErrorCode::Domain, "martingale limit needs 1 < m < inf");
  SupercriticalLimit out;
  out.q = fp.q;
  out.gamma = fp.gamma();
  out.beta = *pe.beta();
  out.degenerate = !pe.pi_rq_at_r_finite();
  const double q = fp.q, beta = out.beta;
  const auto [rq1, qr1] = pe.pi_rq_qr_at_r();

  for (double rho : rho_grid) {
    if (!(rho > 0.0)) fail(ErrorCode::Domain, "rho must be positive");
    RhoRow row;
    row.rho = rho;
    if (out.degenerate) {
      out.phi_table.push_back(row);
      continue;
    }
    // E e^{-rho W} = q + (1-q) ((1-x)/rho)^beta e^{pi_rq(1) - pi_rq(x) - pi_qr(1) + pi_qr(x)},
    // solved for w = 1 - x so that small rho keeps full relative accuracy.
    auto W = [&](double w) {
      const auto [rq, qr] = pe.pi_rq_qr(1.0 - w);
      return -(1.0 - q) * std::expm1(beta * std::log(w / rho) + (rq1 - rq) - (qr1 - qr));
    };
    auto h = [&](double w) { return w - W(w); };
    double w = (1.0 - q) * rho / (1.0 + rho);
    bool done = false;
    for (int it = 1; it <= 200; ++it) {
      const double g = W(w);
      row.iterations = it;
      if (std::abs(w - g) < tol * std::max(w, 1e-300) || std::abs(w - g) < tol * tol) {
        done = true;
        break;
      }
      w = std::clamp(0.5 * w + 0.5 * g, std::numeric_limits<double>::min(), 1.0 - q);
    }
    if (!done) {
      boost::uintmax_t iters = 300;
      const double lo0 = std::numeric_limits<double>::min();
      auto [lo, hi] = boost::math::tools::toms748_solve(h, lo0, 1.0 - q, h(lo0), h(1.0 - q),
                                                        boost::math::tools::eps_tolerance<double>(50), iters);
      w = 0.5 * (lo + hi);
      row.bisected = true;
    }
    row.residual = std::abs(h(w));
    if (row.residual > std::max(1e3 * tol, 1e-10))
      fail(ErrorCode::Convergence, "Laplace fixed point did not converge, residual " + std::to_string(row.residual));
    const double x = 1.0 - w;
    row.laplace = x;
    row.phi = 1.0 - w / (1.0 - q);
    out.phi_table.push_back(row);
  }
  return out;
}

}  // namespace branchkit

#include <cmath>
#include <vector>

#include "branchkit/error.hpp"
#include "branchkit/evolve.hpp"
#include "branchkit/law.hpp"
#include "branchkit/pifn.hpp"
#include "doctest.h"
#include "laws.hpp"
#include "support.hpp"

using namespace branchkit;

namespace {

bool throws_code(ErrorCode code, auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

// Laws with two roots q < r.
std::vector<OffspringLaw> two_root_laws() {
  return {make_explicit({0.2, 0.3, 0.5}), make_explicit({0.5, 0.3, 0.2}), make_linear_fractional(0.25, 0.25),
          make_linear_fractional(0.75, 0.5), make_explicit({0.15, 0.2, 0.25, 0.1, 0.3})};
}

}  // namespace

TEST_CASE("pi_plain: empty interval") {
  const PiEvaluator pe(make_explicit({0.2, 0.3, 0.5}));
  CHECK(pe.pi_plain(0.2, 0.2) == 0.0);
}

TEST_CASE("pi_plain: critical quadratic law has a closed form") {
  // f(x) - x = (1-x)^2 / 4, so pi(0, s) = 4 (1/(1-s) - 1).
  const PiEvaluator pe(make_explicit({0.25, 0.5, 0.25}));
  for (double s : {0.1, 0.5, 0.9, 0.999})
    CHECK(pe.pi_plain(0.0, s) == doctest::Approx(4.0 * (1.0 / (1.0 - s) - 1.0)).epsilon(1e-11));
}

TEST_CASE("pi_plain: critical law against direct quadrature") {
  const OffspringLaw law = make_explicit({0.4, 0.3, 0.2, 0.1});
  const PiEvaluator pe(law);
  const double s = 0.8;
  const double ref = oracle::simpson([&](double x) { return 1.0 / (oracle::poly({0.4, 0.3, 0.2, 0.1}, x) - x); }, 0.0, s);
  CHECK(pe.pi_plain(0.0, s) == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("pi_plain: explicit (0.2, 0.3, 0.5) integrates to lambda t along a trajectory") {
  const OffspringLaw law = make_explicit({0.2, 0.3, 0.5});
  const PiEvaluator pe(law);
  const double F = scalar_F(1.0, 0.0, law).value;
  CHECK(pe.pi_plain(0.0, F) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pi_plain: interval straddling q is a domain error") {
  const PiEvaluator pe(make_explicit({0.2, 0.3, 0.5}));
  CHECK(throws_code(ErrorCode::Domain, [&] { pe.pi_plain(0.2, 0.6); }));
}

TEST_CASE("pi_q: zero at zero") {
  for (const OffspringLaw& law : two_root_laws()) CHECK(PiEvaluator(law).pi_q(0.0) == 0.0);
}

TEST_CASE("pi_q: supercritical linear-fractional closed form") {
  const PiEvaluator pe(make_linear_fractional(0.25, 0.25));
  for (double s : {0.1, 0.5, 0.9}) CHECK(pe.pi_q(s) == doctest::Approx(std::log(1.0 / (1.0 - s)) / 3.0).epsilon(1e-12));
}

TEST_CASE("pi_q: subcritical linear-fractional closed form") {
  const PiEvaluator pe(make_linear_fractional(0.75, 0.5));
  for (double s : {0.1, 0.5, 0.9, 1.2})
    CHECK(pe.pi_q(s) == doctest::Approx(0.5 * std::log(1.5 / (1.5 - s))).epsilon(1e-12));
}

TEST_CASE("pi_q: critical law is a domain error") {
  const PiEvaluator pe(make_linear_fractional(0.5, 0.5));
  CHECK(throws_code(ErrorCode::Domain, [&] { pe.pi_q(0.5); }));
}

TEST_CASE("pi_q: non-negative and increasing") {
  for (const OffspringLaw& law : two_root_laws()) {
    const PiEvaluator pe(law);
    const double r = *pe.fixed_points().r;
    double prev = 0.0;
    for (int i = 1; i < 20; ++i) {
      const double v = pe.pi_q(r * i / 20.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("pi_r: empty interval and decomposition residual") {
  const OffspringLaw law = make_explicit({0.2, 0.3, 0.5});
  const PiEvaluator pe(law);
  CHECK(pe.pi_r(0.7, 0.7) == 0.0);
  const double s1 = 0.5, s2 = 0.9, r = 1.0, d = law.derivative(1.0) - 1.0;
  const double raw = oracle::simpson([](double x) { return 1.0 / (0.2 + 0.3 * x + 0.5 * x * x - x); }, s1, s2);
  CHECK(pe.pi_plain(s1, s2) == doctest::Approx(raw).epsilon(1e-11));
  // For this quadratic law nabla_1 f(x) - 1 = 0.5 (x - 0.4) and nabla_1^2 f = 0.5.
  const double pr = oracle::simpson([](double x) { return 0.5 / (0.5 * (x - 0.4)); }, s1, s2);
  CHECK(pe.pi_r(s1, s2) == doctest::Approx(pr).epsilon(1e-11));
  CHECK(std::abs(d * raw + std::log((r - s1) / (r - s2)) + pr) < 1e-10);
}

TEST_CASE("pi_r: supercritical linear-fractional closed form") {
  // nabla_1^2 f / (nabla_1 f - 1) = 3 / (x - 1/3) for p = p0 = 0.25.
  const PiEvaluator pe(make_linear_fractional(0.25, 0.25));
  const double s1 = 0.5, s2 = 0.9;
  const double closed = 3.0 * std::log((s2 - 1.0 / 3.0) / (s1 - 1.0 / 3.0));
  CHECK(pe.pi_r(s1, s2) == doctest::Approx(closed).epsilon(1e-11));
  const double raw = oracle::simpson([](double x) { return 1.0 / (oracle::lf_pgf(0.25, 0.25, x) - x); }, s1, s2);
  CHECK(pe.pi_plain(s1, s2) == doctest::Approx(-(std::log((1.0 - s1) / (1.0 - s2)) + closed) / 2.0).epsilon(1e-11));
  CHECK(pe.pi_plain(s1, s2) == doctest::Approx(raw).epsilon(1e-10));
}

TEST_CASE("pi_r: arguments outside (q, r) are a domain error") {
  const PiEvaluator pe(make_explicit({0.2, 0.3, 0.5}));
  CHECK(throws_code(ErrorCode::Domain, [&] { pe.pi_r(0.1, 0.5); }));
}

TEST_CASE("pi_rq_qr: zero at zero") {
  for (const OffspringLaw& law : two_root_laws()) {
    const auto [rq, qr] = PiEvaluator(law).pi_rq_qr(0.0);
    CHECK(rq == 0.0);
    CHECK(qr == 0.0);
  }
}

TEST_CASE("pi_rq_qr: linear-fractional correction vanishes") {
  // Both integrands equal 1 for p = p0 = 0.25, so pi_rq(s) = pi_qr(s) = s.
  const PiEvaluator pe(make_linear_fractional(0.25, 0.25));
  for (double s : {0.2, 0.6, 0.95}) {
    const auto [rq, qr] = pe.pi_rq_qr(s);
    CHECK(rq == doctest::Approx(s).epsilon(1e-12));
    CHECK(qr == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("pi_rq_qr: finite at r for a finite-support law, matching the x log x probe") {
  const OffspringLaw law = make_explicit({0.2, 0.3, 0.5});
  const PiEvaluator pe(law);
  const auto [rq, qr] = pe.pi_rq_qr_at_r();
  CHECK(std::isfinite(rq));
  CHECK(std::isfinite(qr));
  CHECK(pe.pi_rq_at_r_finite());
  CHECK(law_xlogx(law, 1.0).sum_verdict == Verdict::Converging);
}

TEST_CASE("pi_rq_qr: needs a second root") {
  const PiEvaluator pe(make_linear_fractional(0.5, 0.5));
  CHECK(throws_code(ErrorCode::Domain, [&] { pe.pi_rq_qr(0.5); }));
}

TEST_CASE("refined_equation_residual: critical branch vanishes at t = 0") {
  const PiEvaluator pe(make_linear_fractional(0.5, 0.5));
  const RefinedResidual r = refined_equation_residual(0.0, 0.3, pe);
  CHECK(r.form == RefinedResidual::Form::Critical);
  CHECK(r.residual == 0.0);
}

TEST_CASE("refined_equation_residual: small on every reference law") {
  for (const auto& [name, law] : reflaws::reference()) {
    CAPTURE(name);
    const PiEvaluator pe(law);
    for (double t : {0.25, 0.5, 1.0, 2.0, 4.0})
      for (double s : {0.0, 0.2, 0.5, 0.8, 0.95}) CHECK(refined_equation_residual(t, s, pe).residual < 1e-6);
  }
}

TEST_CASE("refined_equation_residual: F_t'(q) = gamma^t") {
  for (const OffspringLaw& law : two_root_laws()) {
    const Evolver ev(law);
    const FixedPoints& fp = ev.fixed_points();
    for (double t : {0.5, 1.0, 4.0}) {
      const EvolveResult r = ev.series(t, 16, 1e-13, fp.q);
      CHECK(std::abs(r.coeffs[1] - std::pow(fp.gamma(), t)) < 1e-7);
    }
  }
}

TEST_CASE("refined_equation_residual: supercritical linear-fractional compact relation") {
  const OffspringLaw law = make_linear_fractional(0.25, 0.25);
  const double q = 1.0 / 3.0, m = 3.0;
  for (double t : {0.5, 1.0, 3.0})
    for (double s : {0.0, 0.5, 0.9}) {
      const double F = scalar_F(t, s, law).value;
      const double lhs = (F - q) / (s - q);
      const double rhs = std::exp(-(1.0 - 1.0 / m) * t) * std::pow((1.0 - F) / (1.0 - s), 1.0 / m);
      CHECK(std::abs(lhs - rhs) < 1e-7);
    }
}

TEST_CASE("slowly_varying_profile: finite-support law is bounded with ratio near 1") {
  const PiEvaluator pe(make_explicit({0.2, 0.3, 0.5}));
  const std::vector<ProfilePoint> pts = slowly_varying_profile(pe, Profile::Lq, {1e-2, 1e-4, 1e-6, 1e-8});
  for (const ProfilePoint& p : pts) CHECK(p.value <= std::exp(pe.pi_q_at_q()) + 1e-12);
  CHECK(std::abs(pts.back().elongation - 1.0) < 1e-6);
}

TEST_CASE("slowly_varying_profile: subcritical linear-fractional closed form") {
  const PiEvaluator pe(make_linear_fractional(0.75, 0.5));
  for (const ProfilePoint& p : slowly_varying_profile(pe, Profile::Lq, {0.5, 1e-2, 1e-4})) {
    CHECK(p.value == doctest::Approx(std::pow(1.5 / (0.5 + p.x), 0.5)).epsilon(1e-10));
    CHECK(p.elongation == doctest::Approx(std::pow((0.5 + p.x) / (0.5 + 2.0 * p.x), 0.5)).epsilon(1e-10));
  }
}

TEST_CASE("slowly_varying_profile: heavy tail without x log x is unbounded but slowly varying") {
  const PiEvaluator pe(reflaws::tail_power(0.0, 0.5, 0.7, 3.0, 1.0));
  CHECK(!pe.pi_q_at_q_finite());
  const std::vector<ProfilePoint> pts = slowly_varying_profile(pe, Profile::Lq, {1e-2, 1e-4, 1e-8, 1e-16});
  CHECK(pts[1].value > pts[0].value);
  CHECK(pts[3].value > pts[2].value);
  CHECK(std::abs(pts[1].elongation - 1.0) < std::abs(pts[0].elongation - 1.0));
  // L grows like a power of ln(1/x), so the gap to 1 shrinks like 1/ln(1/x).
  CHECK(std::abs(pts[3].elongation - 1.0) < std::abs(pts[2].elongation - 1.0));
  CHECK(std::abs(pts[3].elongation - 1.0) < 0.05);
}

TEST_CASE("property: lower-branch reconstruction") {
  gen::Source src(51);
  for (const OffspringLaw& law : two_root_laws()) {
    const PiEvaluator pe(law);
    const double q = pe.fixed_points().q;
    const double d = 1.0 - law.derivative(q);
    for (int i = 0; i < 10; ++i) {
      double s1 = src.uniform(0.0, q), s2 = src.uniform(0.0, q);
      if (s1 > s2) std::swap(s1, s2);
      const double lhs = d * pe.pi_plain(s1, s2);
      const double rhs = std::log((q - s1) / (q - s2)) + pe.pi_q(s1) - pe.pi_q(s2);
      CHECK(std::abs(lhs - rhs) < 1e-9);
    }
  }
}

TEST_CASE("property: two-root reconstruction of pi_q") {
  gen::Source src(52);
  for (const OffspringLaw& law : two_root_laws()) {
    const PiEvaluator pe(law);
    const double r = *pe.fixed_points().r, b = *pe.beta();
    for (int i = 0; i < 10; ++i) {
      const double s = src.uniform(0.0, std::min(r, 1.0) * 0.999);
      const auto [rq, qr] = pe.pi_rq_qr(s);
      CHECK(std::abs(pe.pi_q(s) - (b * std::log(r / (r - s)) + rq - qr)) < 1e-9);
    }
  }
}

TEST_CASE("property: pointwise split of the pi_q integrand") {
  for (const OffspringLaw& law : two_root_laws()) {
    const FixedPoints fp = fixed_points(law);
    const double q = fp.q, r = *fp.r, b = *beta(law, fp);
    for (int i = 0; i < 20; ++i) {
      const double s = std::min(r, 1.0) * i / 20.0;
      const double lhs = law.dd({q, q}, s) / (1.0 - law.dd({q}, s));
      const double den = law.dd({r, q}, s);
      const double rhs = b / (r - s) + b * law.dd({r, r, q}, s) / den - law.dd({r, q, q}, s) / den;
      CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("property: third divided difference at r") {
  for (const OffspringLaw& law : two_root_laws()) {
    const FixedPoints fp = fixed_points(law);
    const double q = fp.q, r = *fp.r;
    const double expect = (law.derivative(q) + law.derivative(r) - 2.0) / ((r - q) * (r - q));
    CHECK(law.dd({q, q, r}, r) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("property: beta lies in (0, 1]") {
  gen::Source src(53);
  for (int i = 0; i < 50; ++i) {
    const OffspringLaw law = make_explicit(src.supercritical_probs());
    const double b = *beta(law, fixed_points(law));
    CHECK(b > 0.0);
    CHECK(b <= 1.0 + 1e-12);
  }
}

TEST_CASE("property: finiteness of pi agrees with x log x on decisive laws") {
  std::vector<OffspringLaw> laws = two_root_laws();
  laws.push_back(reflaws::tail_power(0.0, 0.5, 0.7, 3.0, 1.0));
  for (const OffspringLaw& law : laws) {
    const PiEvaluator pe(law);
    const FixedPoints& fp = pe.fixed_points();
    const MomentReport at_q = law_xlogx(law, fp.q);
    if (at_q.verdicts_agree() && at_q.sum_verdict != Verdict::Inconclusive)
      CHECK(pe.pi_q_at_q_finite() == (at_q.sum_verdict == Verdict::Converging));
    if (fp.r && (!law.radius() || *fp.r < *law.radius())) {
      const MomentReport at_r = law_xlogx(law, *fp.r);
      if (at_r.verdicts_agree() && at_r.sum_verdict != Verdict::Inconclusive)
        CHECK(pe.pi_rq_at_r_finite() == (at_r.sum_verdict == Verdict::Converging));
    }
    CHECK(pe.pi_qr_at_r_finite());
  }
  // The heavy-tailed law must be decisive for this check to carry weight.
  const MomentReport heavy = law_xlogx(laws.back(), 1.0);
  CHECK(heavy.sum_verdict == Verdict::Diverging);
}

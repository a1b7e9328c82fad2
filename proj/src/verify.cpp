#include "branchkit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "branchkit/error.hpp"
#include "branchkit/evolve.hpp"
#include "branchkit/mc.hpp"
#include "branchkit/pifn.hpp"
#include "json.hpp"

namespace branchkit {

namespace {

constexpr double kTimes[] = {0.25, 0.5, 1.0, 2.0, 4.0};
constexpr double kPoints[] = {0.0, 0.2, 0.5, 0.8, 0.95};

Check make_check(std::string name, double value, double threshold, std::string detail = {}) {
  Check c;
  c.name = std::move(name);
  c.value = value;
  c.threshold = threshold;
  c.passed = value <= threshold;
  c.detail = std::move(detail);
  return c;
}

Check skipped(std::string name, std::string why) {
  Check c;
  c.name = std::move(name);
  c.skipped = true;
  c.passed = true;
  c.detail = std::move(why);
  return c;
}

// F_t applied to a previous result, keeping 1 - F when F is close to 1.
EvolveResult compose_step(const Evolver& ev, double t, const EvolveResult& prev) {
  if (prev.value >= ev.fixed_points().q && prev.complement < 0.5)
    return ev.scalar_near_one(t, prev.complement);
  return ev.scalar(t, prev.value);
}

void semigroup(const OffspringLaw& law, const VerifyOptions& opts, std::vector<Check>& out) {
  const Evolver ev(law);
  const FixedPoints& fp = ev.fixed_points();
  std::mt19937_64 rng(opts.seed);
  auto unif = [&] { return static_cast<double>(rng() >> 11) * 0x1p-53; };
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double t = 2.0 * unif(), u = 2.0 * unif();
    for (double s : {0.0, 0.3, 0.7, 0.95}) {
      const double direct = ev.scalar(t + u, s).value;
      const double nested = compose_step(ev, t, ev.scalar(u, s)).value;
      worst = std::max(worst, std::abs(direct - nested));
    }
  }
  out.push_back(make_check("semigroup F_{t+u} = F_t o F_u", worst, 1e-8));

  double fixed = 0.0;
  for (double t : kTimes) fixed = std::max(fixed, std::abs(ev.scalar(t, fp.q).value - fp.q));
  out.push_back(make_check("F_t(q) = q", fixed, 1e-8));
  if (fp.regime == Regime::ExtendableSubcritical) {
    double fr = 0.0;
    for (double t : kTimes) fr = std::max(fr, std::abs(ev.scalar(t, *fp.r).value - *fp.r));
    out.push_back(make_check("F_t(r) = r", fr, 1e-8));
  }

  double violation = 0.0;
  for (double s : {0.0, 0.5, 0.95}) {
    double prev = std::abs(s - fp.q);
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
      const double gap = std::abs(ev.scalar(t, s).value - fp.q);
      violation = std::max(violation, gap - prev);
      prev = gap;
    }
  }
  out.push_back(make_check("F_t(s) approaches q monotonically", std::max(0.0, violation), 1e-12));
}

void refined_equation(const OffspringLaw& law, std::vector<Check>& out) {
  const PiEvaluator pe(law);
  const FixedPoints& fp = pe.fixed_points();
  double worst = 0.0;
  for (double t : kTimes)
    for (double s : kPoints) worst = std::max(worst, refined_equation_residual(t, s, pe).residual);
  out.push_back(make_check("refined integral equation residual", worst, 1e-6));

  const std::string gname = "F_t'(q) = gamma^t";
  if (law.radius() && fp.q >= *law.radius()) {
    out.push_back(skipped(gname, "no expansion about q = 1 for this law"));
    return;
  }
  const Evolver ev(law);
  double g = 0.0;
  for (double t : kTimes) {
    const EvolveResult r = ev.series(t, 16, 1e-13, fp.q);
    g = std::max(g, std::abs(r.coeffs[1] - std::exp(fp.gamma_exponent * t)));
  }
  out.push_back(make_check(gname, g, 1e-7));
}

void route_agreement(const OffspringLaw& law, std::vector<Check>& out) {
  const Evolver ev(law);
  double inv = 0.0, ser = 0.0;
  for (double t : kTimes)
    for (double s : kPoints) {
      const double a = ev.scalar(t, s).value;
      inv = std::max(inv, std::abs(a - ev.integral_inverse(t, s).value));
      ser = std::max(ser, std::abs(a - ev.series_value(t, s).value));
    }
  out.push_back(make_check("ode vs integral inversion", inv, 1e-7));
  out.push_back(make_check("ode vs series route", ser, 1e-7));
}

void mc_agreement(const OffspringLaw& law, const VerifyOptions& opts, std::vector<Check>& out) {
  SimConfig cfg;
  cfg.horizon = opts.horizon;
  cfg.replicates = opts.replicates;
  cfg.seed = opts.seed;
  const SimStats st = simulate(law, cfg);
  const Evolver ev(law);
  const std::size_t order = std::min<std::size_t>(2048, std::max<std::size_t>(64, st.counts.size() + 32));
  const EvolveResult dist = ev.series(opts.horizon, order, 1e-13);
  const ChiSquare chi = chi_square_gof(st.counts, dist.coeffs);
  Check c;
  c.name = "histogram vs series route (chi-square p)";
  c.value = chi.p_value;
  c.threshold = 1e-3;
  c.passed = chi.p_value > 1e-3;
  c.detail = "statistic " + std::to_string(chi.statistic) + ", dof " + std::to_string(chi.dof);
  out.push_back(c);

  const double Q = ev.scalar(opts.horizon, 0.0).complement;
  const double n = static_cast<double>(st.replicates);
  const double sigma = std::sqrt(std::max(Q * (1.0 - Q), 1e-300) / n);
  out.push_back(make_check("survival frequency within 3 sigma", std::abs(st.survival_frequency - Q) / sigma, 3.0));
  out.push_back(make_check("Z_t / M_t mean within 4 sigma of 1",
                           st.w_std_error > 0.0 ? std::abs(st.w_mean - 1.0) / st.w_std_error : 0.0, 4.0));
}

template <class F>
void guarded(const std::string& label, std::vector<Check>& out, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Unsupported) {
      out.push_back(skipped(label, e.what()));
      return;
    }
    Check c;
    c.name = label;
    c.passed = false;
    c.detail = std::string(to_string(e.code())) + ": " + e.what();
    out.push_back(c);
  }
}

}  // namespace

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

VerifyReport run_suite(const OffspringLaw& law, const std::string& suite, const VerifyOptions& opts) {
  static const std::vector<std::string> known = {"semigroup", "refined-equation", "route-agreement",
                                                 "mc-agreement", "all"};
  if (std::find(known.begin(), known.end(), suite) == known.end())
    fail(ErrorCode::Parse, "unknown suite '" + suite + "'");
  VerifyReport rep;
  rep.suite = suite;
  auto want = [&](const char* name) { return suite == "all" || suite == name; };
  if (want("semigroup")) guarded("semigroup", rep.checks, [&] { semigroup(law, opts, rep.checks); });
  if (want("refined-equation")) guarded("refined-equation", rep.checks, [&] { refined_equation(law, rep.checks); });
  if (want("route-agreement"))
    guarded("route-agreement", rep.checks, [&] { route_agreement(law, rep.checks); });
  if (want("mc-agreement")) guarded("mc-agreement", rep.checks, [&] { mc_agreement(law, opts, rep.checks); });
  return rep;
}

std::string to_json(const VerifyReport& r) {
  nlohmann::json j;
  j["suite"] = r.suite;
  j["passed"] = r.all_passed();
  auto& arr = j["checks"] = nlohmann::json::array();
  for (const Check& c : r.checks) {
    nlohmann::json o;
    o["name"] = c.name;
    o["passed"] = c.passed;
    o["skipped"] = c.skipped;
    o["value"] = c.value;
    o["threshold"] = c.threshold;
    if (!c.detail.empty()) o["detail"] = c.detail;
    arr.push_back(o);
  }
  return j.dump(2);
}

}  // namespace branchkit

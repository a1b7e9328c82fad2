#include "branchkit/branchkit.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "branchkit/error.hpp"
#include "branchkit/evolve.hpp"
#include "branchkit/law.hpp"
#include "branchkit/limits.hpp"
#include "branchkit/mc.hpp"
#include "branchkit/pifn.hpp"
#include "branchkit/verify.hpp"
#include "json.hpp"

#ifndef BRANCHKIT_VERSION
#define BRANCHKIT_VERSION "0.0.0"
#endif

using nlohmann::json;
namespace bk = branchkit;

struct bk_law {
  bk::OffspringLaw law;
  std::optional<bk::Evolver> evolver;
  std::string evolver_error;
  bk::ErrorCode evolver_code = bk::ErrorCode::Unsupported;
};

struct bk_pi {
  bk::PiEvaluator pe;
};

namespace {

thread_local std::string g_last_error;

bk_status status_of(bk::ErrorCode c) {
  switch (c) {
    case bk::ErrorCode::InvalidLaw: return BK_ERR_INVALID_LAW;
    case bk::ErrorCode::Domain: return BK_ERR_DOMAIN;
    case bk::ErrorCode::DegenerateInput: return BK_ERR_DEGENERATE;
    case bk::ErrorCode::Convergence: return BK_ERR_CONVERGENCE;
    case bk::ErrorCode::Pole: return BK_ERR_POLE;
    case bk::ErrorCode::Underflow: return BK_ERR_UNDERFLOW;
    case bk::ErrorCode::Parse: return BK_ERR_PARSE;
    case bk::ErrorCode::Unsupported: return BK_ERR_UNSUPPORTED;
  }
  return BK_ERR_INTERNAL;
}

bk_status set_error(bk_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <class F>
bk_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return BK_OK;
  } catch (const bk::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const json::exception& e) {
    return set_error(BK_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(BK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(BK_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// JSON has no infinities; they are written as strings.
json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json num(const std::optional<double>& x) { return x ? num(*x) : json(nullptr); }

json series_json(const bk::TruncatedSeries& s) {
  json arr = json::array();
  for (double c : s.coeffs) arr.push_back(num(c));
  return arr;
}

bk_law* wrap(bk::OffspringLaw law) {
  auto h = std::make_unique<bk_law>(bk_law{std::move(law), std::nullopt, {}, {}});
  try {
    h->evolver.emplace(h->law);
  } catch (const bk::Error& e) {
    h->evolver_error = e.what();
    h->evolver_code = e.code();
  }
  return h.release();
}

const bk::Evolver& evolver(const bk_law* h) {
  if (!h->evolver) throw bk::Error(h->evolver_code, h->evolver_error);
  return *h->evolver;
}

json parse_options(const char* text) {
  if (!text || !*text) return json::object();
  json j = json::parse(text);
  if (!j.is_object()) bk::fail(bk::ErrorCode::Parse, "options must be a JSON object");
  return j;
}

std::vector<double> grid_option(const json& o, const char* key, std::vector<double> fallback) {
  if (!o.contains(key)) return fallback;
  const json& v = o[key];
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) bk::fail(bk::ErrorCode::Parse, std::string("\"") + key + "\" must be a number or array");
  return v.get<std::vector<double>>();
}

json verdict_json(const bk::MomentReport& r) {
  return {{"anchor", num(r.anchor)},
          {"sum_verdict", bk::to_string(r.sum_verdict)},
          {"integral_verdict", bk::to_string(r.integral_verdict)},
          {"agree", r.verdicts_agree()}};
}

json classify_json(const bk_law* h) {
  const bk::OffspringLaw& law = h->law;
  json j;
  j["law"] = json::parse(bk::to_json(law.spec()));
  j["mean"] = num(law.mean());
  const bk::Evolver& ev = evolver(h);
  const bk::FixedPoints& fp = ev.fixed_points();
  j["q"] = num(fp.q);
  j["r"] = num(fp.r);
  j["regime"] = bk::to_string(fp.regime);
  j["f_prime_q"] = num(fp.f_prime_q);
  j["gamma"] = num(fp.gamma());
  const std::optional<double> b = bk::beta(law, fp);
  j["beta"] = num(b);
  const bk::RegularityReport reg = bk::regularity(law);
  j["regular"] = reg.regular;
  j["finite_mean"] = reg.finite_mean;

  // At a = 0 every term of the sum vanishes.
  if (fp.q > 0.0)
    j["xlogx_at_q"] = verdict_json(bk::law_xlogx(law, fp.q));
  else
    j["xlogx_at_q"] = {{"anchor", 0.0}, {"sum_verdict", "converging"}, {"integral_verdict", "converging"},
                       {"agree", true}};
  if (fp.r && (!law.radius() || *fp.r < *law.radius()))
    j["xlogx_at_r"] = verdict_json(bk::law_xlogx(law, *fp.r));
  else
    j["xlogx_at_r"] = nullptr;

  try {
    const bk::PiEvaluator pe(law);
    j["pi_q_at_q_finite"] = pe.pi_q_at_q_finite();
    j["pi_q_at_q"] = num(pe.pi_q_at_q());
    if (pe.beta()) {
      j["pi_rq_at_r_finite"] = pe.pi_rq_at_r_finite();
      j["pi_rq_at_r"] = num(pe.pi_rq_qr_at_r().first);
    }
  } catch (const bk::Error& e) {
    if (e.code() != bk::ErrorCode::Unsupported) throw;
    j["pi_q_at_q_finite"] = nullptr;
    j["pi_note"] = e.what();
  }
  return j;
}

json subcritical_json(const bk_law* h, const json& o, std::size_t order) {
  const bk::PiEvaluator pe(h->law);
  const bk::SubcriticalLimit lim = bk::subcritical_limit(pe, order);
  json j;
  j["c"] = num(lim.c);
  j["pi_1_at_1"] = num(lim.pi_1_at_1);
  j["pi_signal_diverging"] = lim.pi_signal_diverging;
  j["xlogx_signal_diverging"] = lim.xlogx_signal_diverging;
  j["psi"] = series_json(lim.psi);
  const bk::Evolver& ev = evolver(h);
  const double lambda = h->law.lambda(), m = h->law.mean();
  json rows = json::array();
  for (double t : grid_option(o, "t", {10.0, 20.0, 40.0})) {
    json row;
    row["t"] = num(t);
    const double Q = ev.scalar(t, 0.0).complement;
    row["survival"] = num(Q);
    row["scaled_survival"] = num(std::exp(lambda * (1.0 - m) * t) * Q);
    try {
      const bk::TruncatedSeries cond = bk::conditional_law_at_t(t, h->law, order);
      double sup = 0.0;
      for (std::size_t k = 0; k < cond.coeffs.size() && k < lim.psi.coeffs.size(); ++k)
        sup = std::max(sup, std::abs(cond.coeffs[k] - lim.psi.coeffs[k]));
      row["conditional_law"] = series_json(cond);
      row["max_coeff_gap_to_psi"] = num(sup);
    } catch (const bk::Error& e) {
      if (e.code() != bk::ErrorCode::Underflow) throw;
      row["conditional_law"] = nullptr;
      row["note"] = e.what();
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

json critical_json(const bk_law* h, const json& o) {
  const bk::PiEvaluator pe(h->law);
  const bk::CriticalReport rep = bk::critical_asymptotics(
      pe, grid_option(o, "t", {10.0, 100.0, 1000.0, 10000.0}), grid_option(o, "theta", {0.5, 1.0, 2.0}));
  json j;
  j["b"] = num(rep.b);
  j["alpha"] = num(rep.alpha);
  j["fitted_slope"] = num(rep.fitted_slope);
  j["predicted_slope"] = num(-1.0 / rep.alpha);
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"t", num(r.t)}, {"survival", num(r.survival)}, {"predicted", num(r.predicted)},
                    {"scaled", num(r.scaled)}});
  j["rows"] = rows;
  json lap = json::array();
  for (const auto& r : rep.laplace)
    lap.push_back({{"theta", num(r.theta)}, {"value", num(r.value)}, {"limit", num(r.limit)}});
  j["laplace"] = lap;
  if (h->law.kind() == bk::LawKind::TailPower && h->law.spec().alpha == 0.0) {
    const bk::AlphaZeroReport az = bk::alpha_zero_profile(pe, grid_option(o, "y", {1.0, 10.0, 100.0, 1e4, 1e6}));
    json v = json::array();
    for (const auto& r : az.rows)
      v.push_back({{"y", num(r.y)}, {"v", num(r.v)}, {"elongation", num(r.elongation)}});
    j["alpha_zero"] = {{"rows", v}, {"increasing", az.increasing}, {"v_at_one", num(az.v_at_one)}};
  }
  return j;
}

json supercritical_json(const bk_law* h, const json& o, std::size_t order) {
  const bk::PiEvaluator pe(h->law);
  const bk::SupercriticalLimit loc = bk::supercritical_local_limit(pe, order);
  const bk::SupercriticalLimit mart =
      bk::martingale_limit_transform(pe, grid_option(o, "rho", {0.25, 1.0, 4.0}));
  json j;
  j["q"] = num(loc.q);
  j["gamma"] = num(loc.gamma);
  j["beta"] = num(loc.beta);
  j["a_coeffs"] = series_json(loc.a_coeffs);
  j["extinction_limit"] = series_json(loc.extinction_limit);
  j["degenerate"] = mart.degenerate;
  json rows = json::array();
  for (const auto& r : mart.phi_table)
    rows.push_back({{"rho", num(r.rho)}, {"laplace", num(r.laplace)}, {"phi", num(r.phi)},
                    {"residual", num(r.residual)}, {"iterations", r.iterations}, {"bisected", r.bisected}});
  j["phi_table"] = rows;
  return j;
}

}  // namespace

extern "C" {

const char* bk_version(void) { return BRANCHKIT_VERSION; }

const char* bk_status_string(bk_status s) {
  switch (s) {
    case BK_OK: return "ok";
    case BK_ERR_INVALID_LAW: return "invalid law";
    case BK_ERR_DOMAIN: return "domain error";
    case BK_ERR_DEGENERATE: return "degenerate input";
    case BK_ERR_CONVERGENCE: return "convergence failure";
    case BK_ERR_POLE: return "pole";
    case BK_ERR_UNDERFLOW: return "underflow";
    case BK_ERR_PARSE: return "parse error";
    case BK_ERR_UNSUPPORTED: return "unsupported";
    case BK_ERR_IO: return "i/o error";
    case BK_ERR_NULL_ARG: return "null argument";
    case BK_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bk_last_error(void) { return g_last_error.c_str(); }

void bk_free_string(char* s) { std::free(s); }

bk_status bk_law_from_json(const char* text, bk_law** out) {
  if (!text || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  *out = nullptr;
  return guard([&] { *out = wrap(bk::make_law(bk::parse_law_spec(text))); });
}

bk_status bk_law_explicit(const double* probs, size_t n, double lambda, bk_law** out) {
  if (!probs || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  *out = nullptr;
  return guard([&] { *out = wrap(bk::make_explicit(std::vector<double>(probs, probs + n), lambda)); });
}

bk_status bk_law_linear_fractional(double p0, double p, double lambda, bk_law** out) {
  if (!out) return set_error(BK_ERR_NULL_ARG, "null argument");
  *out = nullptr;
  return guard([&] { *out = wrap(bk::make_linear_fractional(p0, p, lambda)); });
}

void bk_law_free(bk_law* law) { delete law; }

bk_status bk_law_to_json(const bk_law* law, char** out) {
  if (!law || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] { *out = dup_string(bk::to_json(law->law.spec())); });
}

bk_status bk_law_pgf(const bk_law* law, double s, double* out) {
  if (!law || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] { *out = law->law.pgf(s); });
}

bk_status bk_law_mean(const bk_law* law, double* out) {
  if (!law || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] { *out = law->law.mean(); });
}

bk_status bk_law_fixed_points(const bk_law* law, bk_fixed_points* out) {
  if (!law || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] {
    const bk::FixedPoints& fp = evolver(law).fixed_points();
    bk_fixed_points r{};
    r.q = fp.q;
    r.has_r = fp.r.has_value();
    r.r = fp.r.value_or(NAN);
    r.regime = static_cast<bk_regime>(fp.regime);
    r.mean = fp.mean;
    r.f_prime_q = fp.f_prime_q;
    r.gamma = fp.gamma();
    const std::optional<double> b = bk::beta(law->law, fp);
    r.has_beta = b.has_value();
    r.beta = b.value_or(NAN);
    *out = r;
  });
}

bk_status bk_classify(const bk_law* law, char** out) {
  if (!law || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] { *out = dup_string(classify_json(law).dump(2)); });
}

bk_status bk_population_mean(const bk_law* law, double t, double* out) {
  if (!law || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] { *out = bk::population_mean(t, law->law); });
}

bk_status bk_evolve(const bk_law* law, bk_route route, double t, double s, double tol, bk_value* out) {
  if (!law || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] {
    const bk::Evolver& ev = evolver(law);
    bk::EvolveResult r;
    switch (route) {
      case BK_ROUTE_ODE: r = ev.scalar(t, s, tol); break;
      case BK_ROUTE_SERIES: r = ev.series_value(t, s, tol); break;
      case BK_ROUTE_INVERSE: r = ev.integral_inverse(t, s, tol); break;
      default: bk::fail(bk::ErrorCode::Domain, "unknown route");
    }
    *out = bk_value{r.value, r.complement, r.error_estimate};
  });
}

bk_status bk_distribution(const bk_law* law, double t, size_t order, double tol, double* coeffs,
                          double* error_estimate) {
  if (!law || !coeffs) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] {
    const bk::EvolveResult r = evolver(law).series(t, order, tol);
    for (size_t k = 0; k <= order; ++k) coeffs[k] = k < r.coeffs.size() ? r.coeffs[k] : 0.0;
    if (error_estimate) *error_estimate = r.error_estimate;
  });
}

bk_status bk_pi_new(const bk_law* law, bk_pi** out) {
  if (!law || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  *out = nullptr;
  return guard([&] { *out = new bk_pi{bk::PiEvaluator(law->law)}; });
}

void bk_pi_free(bk_pi* pi) { delete pi; }

bk_status bk_pi_plain(const bk_pi* pi, double s1, double s2, double* out) {
  if (!pi || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] { *out = pi->pe.pi_plain(s1, s2); });
}

bk_status bk_pi_q(const bk_pi* pi, double s, double* out) {
  if (!pi || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] { *out = pi->pe.pi_q(s); });
}

bk_status bk_pi_rq_qr(const bk_pi* pi, double s, double* rq, double* qr) {
  if (!pi || !rq || !qr) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] {
    const auto [a, b] = pi->pe.pi_rq_qr(s);
    *rq = a;
    *qr = b;
  });
}

bk_status bk_refined_residual(const bk_pi* pi, double t, double s, double* residual) {
  if (!pi || !residual) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] { *residual = bk::refined_equation_residual(t, s, pi->pe).residual; });
}

bk_status bk_limits(const bk_law* law, const char* options_json, char** out) {
  if (!law || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] {
    const json o = parse_options(options_json);
    const std::size_t order = o.value("order", std::size_t{64});
    const bk::FixedPoints& fp = evolver(law).fixed_points();
    json j;
    j["regime"] = bk::to_string(fp.regime);
    switch (fp.regime) {
      case bk::Regime::Subcritical:
      case bk::Regime::ExtendableSubcritical: j["subcritical"] = subcritical_json(law, o, order); break;
      case bk::Regime::Critical: j["critical"] = critical_json(law, o); break;
      case bk::Regime::Supercritical: j["supercritical"] = supercritical_json(law, o, order); break;
    }
    *out = dup_string(j.dump(2));
  });
}

void bk_sim_config_default(bk_sim_config* c) {
  if (!c) return;
  const bk::SimConfig d;
  c->horizon = d.horizon;
  c->replicates = d.replicates;
  c->seed = d.seed;
  c->population_cap = d.population_cap;
  c->threads = d.threads;
  c->extinction_conditioned = 0;
  c->t_max = d.t_max;
}

bk_status bk_simulate(const bk_law* law, const bk_sim_config* config, char** out) {
  if (!law || !config || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] {
    bk::SimConfig c;
    c.horizon = config->horizon;
    c.replicates = config->replicates;
    c.seed = config->seed;
    c.population_cap = config->population_cap;
    c.threads = config->threads;
    c.t_max = config->t_max;
    const bk::SimStats st = config->extinction_conditioned ? bk::extinction_conditioned_sample(law->law, c)
                                                           : bk::simulate(law->law, c);
    *out = dup_string(bk::to_json(st));
  });
}

bk_status bk_verify(const bk_law* law, const char* suite, const char* options_json, char** out,
                    int* passed) {
  if (!law || !suite || !out) return set_error(BK_ERR_NULL_ARG, "null argument");
  return guard([&] {
    const json o = parse_options(options_json);
    bk::VerifyOptions opts;
    opts.seed = o.value("seed", opts.seed);
    opts.replicates = o.value("reps", opts.replicates);
    opts.horizon = o.value("t", opts.horizon);
    const bk::VerifyReport rep = bk::run_suite(law->law, suite, opts);
    if (passed) *passed = rep.all_passed() ? 1 : 0;
    *out = dup_string(bk::to_json(rep));
  });
}

}  // extern "C"

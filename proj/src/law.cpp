#include "branchkit/law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "json.hpp"

#include "branchkit/divided.hpp"
#include "branchkit/error.hpp"
#include "law_model.hpp"
#include "branchkit/series_ops.hpp"

namespace branchkit {

using Coeffs = std::vector<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();

const char* to_string(LawKind k) noexcept {
  switch (k) {
    case LawKind::Explicit: return "explicit";
    case LawKind::LinearFractional: return "linear-fractional";
    case LawKind::TailPower: return "tail-power";
  }
  return "?";
}

const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::Subcritical: return "subcritical";
    case Regime::Critical: return "critical";
    case Regime::Supercritical: return "supercritical";
    case Regime::ExtendableSubcritical: return "extendable-subcritical";
  }
  return "?";
}

double FixedPoints::gamma() const { return std::exp(gamma_exponent); }

namespace detail {

Coeffs LawModel::dd_series(std::span<const double> anchors, std::size_t n) const {
  Coeffs v = coefficients(n + anchors.size());
  for (double a : anchors) {
    Coeffs u(v.size() - 1);
    for (std::size_t k = u.size(); k-- > 0;)
      u[k] = v[k + 1] + (k + 1 < u.size() ? a * u[k + 1] : 0.0);
    v.swap(u);
  }
  v.resize(n + 1, 0.0);
  return v;
}

Coeffs LawModel::compose(std::span<const double> c, std::size_t n) const {
  const double c0 = c.empty() ? 0.0 : c[0];
  Coeffs t = taylor(c0, n);
  Coeffs d(c.begin(), c.end());
  if (!d.empty()) d[0] = 0.0;
  return ops::compose(t, d, n);
}

namespace {

// ---------------------------------------------------------------- explicit

class ExplicitModel final : public LawModel {
 public:
  explicit ExplicitModel(Coeffs p) : p_(std::move(p)) {}

  double mean() const override {
    double m = 0.0;
    for (std::size_t k = 1; k < p_.size(); ++k) m += static_cast<double>(k) * p_[k];
    return m;
  }
  std::optional<double> radius() const override { return std::nullopt; }
  double value(double x) const override {
    double acc = 0.0;
    for (auto it = p_.rbegin(); it != p_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
  Coeffs taylor(double c, std::size_t n) const override { return ops::taylor_shift(p_, c, n); }
  Coeffs coefficients(std::size_t n) const override {
    Coeffs out(n + 1, 0.0);
    std::copy_n(p_.begin(), std::min(p_.size(), n + 1), out.begin());
    return out;
  }
  double dd(std::span<const double> anchors, double x) const override {
    Coeffs v = p_;
    for (double a : anchors) {
      if (v.size() <= 1) return 0.0;
      Coeffs u(v.size() - 1);
      u.back() = v.back();
      for (std::size_t k = u.size() - 1; k-- > 0;) u[k] = v[k + 1] + a * u[k + 1];
      v.swap(u);
    }
    double acc = 0.0;
    for (auto it = v.rbegin(); it != v.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
  Coeffs dd_series(std::span<const double> anchors, std::size_t n) const override {
    Coeffs v = p_;
    v.resize(std::max(v.size(), n + anchors.size() + 1), 0.0);
    for (double a : anchors) {
      Coeffs u(v.size() - 1);
      u.back() = v.back();
      for (std::size_t k = u.size() - 1; k-- > 0;) u[k] = v[k + 1] + a * u[k + 1];
      v.swap(u);
    }
    v.resize(n + 1, 0.0);
    return v;
  }
  Coeffs compose(std::span<const double> c, std::size_t n) const override {
    return ops::compose(p_, c, n);
  }
  Coeffs sampling_table() const override { return p_; }

 private:
  Coeffs p_;
};

// ------------------------------------------------------- linear-fractional

class LinearFractionalModel final : public LawModel {
 public:
  LinearFractionalModel(double p0, double p) : p0_(p0), p_(p), b_(1.0 - p) {}

  double mean() const override { return (1.0 - p0_) / p_; }
  std::optional<double> radius() const override {
    if (b_ == 0.0) return std::nullopt;
    return 1.0 / b_;
  }
  double value(double x) const override {
    return p0_ + (1.0 - p0_) * p_ * x / (1.0 - b_ * x);
  }
  Coeffs taylor(double c, std::size_t n) const override {
    Coeffs t(n + 1, 0.0);
    t[0] = value(c);
    if (n == 0) return t;
    const double den = 1.0 - b_ * c;
    if (!(den > 0.0)) fail(ErrorCode::Pole, "linear-fractional expansion point at or beyond the pole");
    // f(c+h) - f(c) = (1-p0) p h / (den (den - b h))
    double term = (1.0 - p0_) * p_ / (den * den);
    for (std::size_t k = 1; k <= n; ++k) {
      t[k] = term;
      term *= b_ / den;
    }
    return t;
  }
  Coeffs coefficients(std::size_t n) const override {
    Coeffs out(n + 1, 0.0);
    out[0] = p0_;
    double term = (1.0 - p0_) * p_;
    for (std::size_t k = 1; k <= n; ++k) {
      out[k] = term;
      term *= b_;
    }
    return out;
  }
  double dd(std::span<const double> anchors, double x) const override {
    if (anchors.empty()) return value(x);
    const ClosedForm cf = lf_closed_forms(p0_, p_, AnchorList(Coeffs(anchors.begin(), anchors.end())));
    return cf(x);
  }
  Coeffs dd_series(std::span<const double> anchors, std::size_t n) const override {
    if (anchors.empty()) return coefficients(n);
    const ClosedForm cf = lf_closed_forms(p0_, p_, AnchorList(Coeffs(anchors.begin(), anchors.end())));
    Coeffs out(n + 1);
    double term = cf.constant;
    for (std::size_t k = 0; k <= n; ++k) {
      out[k] = term;
      term *= b_;
    }
    return out;
  }
  Coeffs compose(std::span<const double> c, std::size_t n) const override {
    // p0 + (1-p0) p C / (1 - b C)
    Coeffs den(n + 1, 0.0);
    for (std::size_t k = 0; k <= n; ++k) den[k] = (k == 0 ? 1.0 : 0.0) - b_ * (k < c.size() ? c[k] : 0.0);
    Coeffs out = ops::divide(c, den, n);
    for (double& v : out) v *= (1.0 - p0_) * p_;
    out[0] += p0_;
    return out;
  }
  Coeffs sampling_table() const override { return {}; }

 private:
  double p0_, p_, b_;
};

// -------------------------------------------------------------- tail-power

// f(x) = 1 - m X + c X^{1+alpha} L(X), L(X) = (A + ln(1/X))^{-kappa}, X = 1 - x.
// The tail transforms at 1 are
//   nabla_1 f   = m - c X^alpha L(X),
//   nabla_1^2 f = c X^{alpha-1} L(X).
class TailPowerModel final : public LawModel {
 public:
  TailPowerModel(double alpha, double c, double m, double shift, double kappa, std::size_t cutoff)
      : alpha_(alpha), c_(c), m_(m), shift_(shift), kappa_(kappa), cutoff_(cutoff) {}

  double mean() const override {
    if (alpha_ < 0.0) return kInf;
    if (alpha_ == 0.0 && kappa_ == 0.0) return m_ - c_;
    return m_;
  }
  std::optional<double> radius() const override { return 1.0; }

  double slow(double X) const {
    if (kappa_ == 0.0) return 1.0;
    return std::pow(shift_ + std::log(1.0 / X), -kappa_);
  }
  // c X^e L(X), with the X -> 0 limit.
  double power_term(double X, double e) const {
    if (X <= 0.0) {
      if (e > 0.0 || (e == 0.0 && kappa_ > 0.0)) return 0.0;
      if (e == 0.0) return c_;
      return std::copysign(kInf, c_);
    }
    return c_ * std::pow(X, e) * slow(X);
  }

  double value(double x) const override {
    const double X = 1.0 - x;
    return 1.0 - m_ * X + power_term(X, 1.0 + alpha_);
  }
  double tail1(double x) const { return m_ - power_term(1.0 - x, alpha_); }
  double tail_at_complement(int ones, double X) const override {
    if (ones == 0) return 1.0 - m_ * X + power_term(X, 1.0 + alpha_);
    if (ones == 1) return m_ - power_term(X, alpha_);
    if (ones == 2) return power_term(X, alpha_ - 1.0);
    fail(ErrorCode::Unsupported, "tail-power laws support at most two anchors at 1");
  }
  double tail2(double x) const { return power_term(1.0 - x, alpha_ - 1.0); }

  // Coefficients in h of c X^e L(X) about x = c0.
  Coeffs power_series(double c0, double e, std::size_t n) const {
    const double X0 = 1.0 - c0;
    if (!(X0 > 0.0)) fail(ErrorCode::Domain, "tail-power expansion needs a point below 1");
    Coeffs s = ops::binomial(e, n);
    if (kappa_ != 0.0) {
      Coeffs l = ops::neg_log1m(n);
      l[0] = shift_ + std::log(1.0 / X0);
      s = ops::multiply(s, ops::power(l, -kappa_, n), n);
    }
    const double lead = c_ * std::pow(X0, e);
    for (double& v : s) v *= lead;
    ops::rescale(s, 1.0 / X0);
    return s;
  }

  Coeffs taylor(double c0, std::size_t n) const override {
    Coeffs t = power_series(c0, 1.0 + alpha_, n);
    t[0] += 1.0 - m_ * (1.0 - c0);
    if (n >= 1) t[1] += m_;
    return t;
  }
  Coeffs tail_taylor(int ones, double c0, std::size_t n) const {
    if (ones == 1) {
      Coeffs t = power_series(c0, alpha_, n);
      for (double& v : t) v = -v;
      t[0] += m_;
      return t;
    }
    return power_series(c0, alpha_ - 1.0, n);
  }
  Coeffs coefficients(std::size_t n) const override { return taylor(0.0, n); }

  SmoothFunction tail_function(int ones) const {
    SmoothFunction g;
    if (ones == 0)
      g.value = [this](double x) { return value(x); };
    else if (ones == 1)
      g.value = [this](double x) { return tail1(x); };
    else
      g.value = [this](double x) { return tail2(x); };
    g.taylor = [this, ones](double c, std::size_t n) {
      return ones == 0 ? taylor(c, n) : tail_taylor(ones, c, n);
    };
    g.taylor_radius = [](double c) { return 1.0 - c; };
    return g;
  }

  static int strip_ones(std::span<const double> anchors, std::vector<double>& rest) {
    int ones = 0;
    for (double a : anchors) {
      if (a == 1.0)
        ++ones;
      else
        rest.push_back(a);
    }
    if (ones > 2) fail(ErrorCode::Unsupported, "tail-power laws support at most two anchors at 1");
    for (double a : rest)
      if (a > 1.0 || a < 0.0) fail(ErrorCode::Domain, "tail-power anchor outside [0, 1]");
    return ones;
  }

  double dd(std::span<const double> anchors, double x) const override {
    std::vector<double> nodes;
    const int ones = strip_ones(anchors, nodes);
    nodes.push_back(x);
    return divided_difference(tail_function(ones), nodes);
  }

  Coeffs dd_series(std::span<const double> anchors, std::size_t n) const override {
    std::vector<double> rest;
    const int ones = strip_ones(anchors, rest);
    double amax = 0.0;
    for (double a : rest) amax = std::max(amax, a);
    std::size_t extra = 0;
    if (!rest.empty())
      extra = amax <= 0.0 ? rest.size()
                          : std::min<std::size_t>(8000, static_cast<std::size_t>(std::ceil(40.0 / -std::log(amax))) + rest.size());
    Coeffs v = ones == 0 ? taylor(0.0, n + extra) : tail_taylor(ones, 0.0, n + extra);
    for (double a : rest) {
      Coeffs u(v.size() - 1);
      u.back() = v.back();
      for (std::size_t k = u.size() - 1; k-- > 0;) u[k] = v[k + 1] + a * u[k + 1];
      v.swap(u);
    }
    v.resize(n + 1, 0.0);
    return v;
  }

  Coeffs sampling_table() const override {
    Coeffs p = coefficients(cutoff_);
    double sum = 0.0;
    for (double& v : p) {
      v = std::max(v, 0.0);
      sum += v;
    }
    p.back() += std::max(0.0, 1.0 - sum);
    return p;
  }

 private:
  double alpha_, c_, m_, shift_, kappa_;
  std::size_t cutoff_;
};

}  // namespace
}  // namespace detail

// ------------------------------------------------------------ OffspringLaw

OffspringLaw::OffspringLaw(LawSpec spec, std::shared_ptr<const detail::LawModel> model)
    : spec_(std::move(spec)), model_(std::move(model)) {}

double OffspringLaw::mean() const { return model_->mean(); }
std::optional<double> OffspringLaw::radius() const { return model_->radius(); }
double OffspringLaw::pgf(double x) const { return model_->value(x); }

double OffspringLaw::derivative(double x) const {
  if (x == 1.0) return mean();
  return model_->taylor(x, 1)[1];
}

std::vector<double> OffspringLaw::taylor(double c, std::size_t n) const {
  return model_->taylor(c, n);
}

TruncatedSeries OffspringLaw::coefficients(std::size_t n) const {
  Coeffs p = model_->coefficients(n);
  double bound = 0.0;
  if (spec_.kind != LawKind::Explicit || spec_.probs.size() > n + 1) {
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    bound = std::max(0.0, 1.0 - sum);
  }
  return TruncatedSeries(std::move(p), model_->radius(), bound);
}

double OffspringLaw::dd(std::span<const double> anchors, double x) const {
  return model_->dd(anchors, x);
}

double OffspringLaw::dd(std::initializer_list<double> anchors, double x) const {
  return model_->dd(std::span<const double>(anchors.begin(), anchors.size()), x);
}

std::vector<double> OffspringLaw::dd_series(std::span<const double> anchors, std::size_t n) const {
  return model_->dd_series(anchors, n);
}

std::vector<double> OffspringLaw::compose(std::span<const double> c, std::size_t n) const {
  return model_->compose(c, n);
}

std::vector<double> OffspringLaw::sampling_table() const { return model_->sampling_table(); }

double OffspringLaw::tail_at_complement(int ones, double X) const {
  return model_->tail_at_complement(ones, X);
}

// ---------------------------------------------------------------- make_law

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    fail(ErrorCode::InvalidLaw, "lifetime rate lambda must be positive");
}

}  // namespace

OffspringLaw make_law(const LawSpec& in) {
  LawSpec spec = in;
  check_lambda(spec.lambda);
  switch (spec.kind) {
    case LawKind::Explicit: {
      auto& p = spec.probs;
      if (p.empty()) fail(ErrorCode::InvalidLaw, "explicit law needs at least one probability");
      for (double v : p) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidLaw, "non-finite probability");
        if (v < 0.0) fail(ErrorCode::InvalidLaw, "negative probability");
      }
      const double sum = std::accumulate(p.begin(), p.end(), 0.0);
      if (std::abs(sum - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "probabilities sum to " << sum << ", not 1";
        fail(ErrorCode::InvalidLaw, os.str());
      }
      for (double& v : p) v /= sum;
      while (p.size() > 1 && p.back() == 0.0) p.pop_back();
      if (p.size() > 1 && p[1] >= 1.0) fail(ErrorCode::InvalidLaw, "p_1 = 1 gives a degenerate process");
      return OffspringLaw(spec, std::make_shared<detail::ExplicitModel>(p));
    }
    case LawKind::LinearFractional: {
      if (!(spec.p0 >= 0.0 && spec.p0 < 1.0))
        fail(ErrorCode::InvalidLaw, "linear-fractional p0 must lie in [0, 1)");
      if (!(spec.p > 0.0 && spec.p <= 1.0))
        fail(ErrorCode::InvalidLaw, "linear-fractional p must lie in (0, 1]");
      if (spec.p0 == 0.0 && spec.p == 1.0)
        fail(ErrorCode::InvalidLaw, "p_1 = 1 gives a degenerate process");
      return OffspringLaw(spec, std::make_shared<detail::LinearFractionalModel>(spec.p0, spec.p));
    }
    case LawKind::TailPower: {
      const double kappa = spec.log_power.value_or(spec.alpha == 0.0 ? 1.0 : 0.0);
      spec.log_power = kappa;
      if (!std::isfinite(spec.alpha) || spec.alpha <= -1.0 || spec.alpha > 1.0)
        fail(ErrorCode::InvalidLaw, "tail-power alpha must lie in (-1, 1]");
      if (!std::isfinite(spec.scale) || spec.scale == 0.0)
        fail(ErrorCode::InvalidLaw, "tail-power scale must be non-zero");
      if (!(spec.mean >= 0.0) || !std::isfinite(spec.mean))
        fail(ErrorCode::InvalidLaw, "tail-power mean must be finite and non-negative");
      if (kappa < 0.0 || (kappa > 0.0 && !(spec.log_shift > 0.0)))
        fail(ErrorCode::InvalidLaw, "tail-power log factor needs log_power >= 0 and log_shift > 0");
      if (spec.cutoff < 2) fail(ErrorCode::InvalidLaw, "tail-power cutoff must be at least 2");
      auto model = std::make_shared<detail::TailPowerModel>(spec.alpha, spec.scale, spec.mean,
                                                            spec.log_shift, kappa, spec.cutoff);
      const Coeffs p = model->coefficients(spec.cutoff);
      double sum = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (!std::isfinite(p[k]) || p[k] < -1e-14) {
          std::ostringstream os;
          os << "tail-power parameters give p_" << k << " = " << p[k] << " < 0";
          fail(ErrorCode::InvalidLaw, os.str());
        }
        sum += p[k];
      }
      if (p[0] > 1.0 || sum > 1.0 + 1e-12) fail(ErrorCode::InvalidLaw, "tail-power coefficients exceed one");
      if (p[1] >= 1.0 - 1e-15) fail(ErrorCode::InvalidLaw, "p_1 = 1 gives a degenerate process");
      return OffspringLaw(spec, model);
    }
  }
  fail(ErrorCode::InvalidLaw, "unknown law kind");
}

OffspringLaw make_explicit(std::vector<double> probs, double lambda) {
  LawSpec s;
  s.kind = LawKind::Explicit;
  s.probs = std::move(probs);
  s.lambda = lambda;
  return make_law(s);
}

OffspringLaw make_linear_fractional(double p0, double p, double lambda) {
  LawSpec s;
  s.kind = LawKind::LinearFractional;
  s.p0 = p0;
  s.p = p;
  s.lambda = lambda;
  return make_law(s);
}

// ------------------------------------------------------------ fixed points

namespace {

constexpr double kCriticalBand = 1e-12;

// Root of the increasing function g(x) = 1 on [lo, hi], g(lo) <= 1 <= g(hi).
double solve_unit(const std::function<double(double)>& g, double lo, double hi) {
  auto h = [&](double x) { return g(x) - 1.0; };
  double flo = h(lo), fhi = h(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  boost::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(
      h, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (a + b);
}

// nabla_1 f - 1 is flat to rounding over several ulps at a root; pick the
// double in a small window that minimises |f(x) - x| instead.
double polish_root(const OffspringLaw& f, double x0) {
  auto residual = [&](double x) -> long double {
    if (f.kind() != LawKind::Explicit) return std::abs(f.pgf(x) - x);
    const std::vector<double>& p = f.spec().probs;
    long double acc = 0.0L;
    for (std::size_t k = p.size(); k-- > 0;) acc = acc * x + p[k];
    return std::abs(acc - x);
  };
  double best = x0;
  long double res = residual(x0);
  for (double dir : {-1.0, 1.0}) {
    double y = x0;
    for (int i = 0; i < 8; ++i) {
      y = std::nextafter(y, dir * std::numeric_limits<double>::infinity());
      if (const long double ry = residual(y); ry < res) best = y, res = ry;
    }
  }
  return best;
}

}  // namespace

FixedPoints fixed_points(const OffspringLaw& f) {
  FixedPoints fp;
  fp.mean = f.mean();
  const double m = fp.mean;
  auto g1 = [&](double x) { return f.dd({1.0}, x); };
  if (std::abs(m - 1.0) <= kCriticalBand) {
    fp.regime = Regime::Critical;
    fp.q = 1.0;
  } else if (m < 1.0) {
    fp.q = 1.0;
    fp.regime = Regime::Subcritical;
    if (f.kind() == LawKind::LinearFractional) {
      if (f.spec().p < 1.0) fp.r = f.spec().p0 / (1.0 - f.spec().p);
    } else if (f.kind() == LawKind::Explicit) {
      // x - f(x) = (x - 1)(1 - nabla_1 f(x)); nabla_1 f increases from m < 1.
      double hi = 2.0;
      while (hi <= 1e6 && g1(hi) < 1.0) hi *= 2.0;
      if (hi <= 1e6) fp.r = polish_root(f, solve_unit(g1, 1.0, hi));
    }
    if (fp.r) fp.regime = Regime::ExtendableSubcritical;
  } else {
    fp.regime = Regime::Supercritical;
    fp.r = 1.0;
    if (f.kind() == LawKind::LinearFractional) {
      fp.q = f.spec().p0 / (1.0 - f.spec().p);
    } else {
      // f(x) - x = (1 - x)(1 - nabla_1 f(x)) on [0, 1).
      const double g0 = g1(0.0);
      if (g0 >= 1.0) {
        fp.q = 0.0;
      } else {
        double hi = 0.5;
        while (g1(hi) < 1.0) hi = 0.5 * (1.0 + hi);
        fp.q = polish_root(f, solve_unit(g1, 0.0, hi));
      }
    }
  }
  fp.f_prime_q = f.derivative(fp.q);
  fp.gamma_exponent = f.lambda() * (fp.f_prime_q - 1.0);
  return fp;
}

std::optional<double> beta(const OffspringLaw& f, const FixedPoints& fp) {
  if (fp.regime == Regime::Critical || !fp.r) return std::nullopt;
  return (1.0 - fp.f_prime_q) / (f.derivative(*fp.r) - 1.0);
}

// --------------------------------------------------------- conditioned laws

OffspringLaw dual_law(const OffspringLaw& f) {
  const FixedPoints fp = fixed_points(f);
  if (fp.q <= 0.0) fail(ErrorCode::Domain, "dual law needs q > 0 (no extinction component)");
  if (fp.q >= 1.0) fail(ErrorCode::Domain, "dual law needs a supercritical law with q < 1");
  const double q = fp.q;
  if (f.kind() == LawKind::LinearFractional)
    return make_linear_fractional(1.0 - f.spec().p, 1.0 - f.spec().p0, f.lambda());
  std::size_t n = f.kind() == LawKind::Explicit ? f.spec().probs.size() - 1 : 64;
  if (f.kind() == LawKind::TailPower)
    n = std::max<std::size_t>(n, static_cast<std::size_t>(std::ceil(40.0 / -std::log(q))));
  Coeffs g = f.coefficients(n).coeffs;
  double scale = 1.0 / q;
  for (double& v : g) {
    v *= scale;
    scale *= q;
  }
  const double sum = std::accumulate(g.begin(), g.end(), 0.0);
  for (double& v : g) v /= sum;
  return make_explicit(std::move(g), f.lambda());
}

OffspringLaw success_law(const OffspringLaw& f) {
  const FixedPoints fp = fixed_points(f);
  if (fp.q >= 1.0) fail(ErrorCode::Domain, "success law needs a supercritical law with q < 1");
  const double q = fp.q;
  if (q == 0.0) return f;
  if (f.kind() == LawKind::LinearFractional)
    return make_linear_fractional(0.0, fp.f_prime_q, f.lambda());
  if (f.kind() != LawKind::Explicit)
    fail(ErrorCode::Unsupported, "success law is implemented for explicit and linear-fractional laws");
  const std::size_t n = f.spec().probs.size() - 1;
  Coeffs t = f.taylor(q, n);
  Coeffs h(n + 1, 0.0);
  double scale = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    h[k] = t[k] * scale;
    scale *= 1.0 - q;
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v /= sum;
  return make_explicit(std::move(h), f.lambda());
}

// ------------------------------------------------------------ closed forms

double ClosedForm::operator()(double s) const {
  if (std::isinf(pole)) return constant;
  if (s >= pole) fail(ErrorCode::Pole, "evaluation at or beyond the pole");
  return constant / (1.0 - s / pole);
}

ClosedForm lf_closed_forms(double p0, double p, const AnchorList& anchors) {
  if (!(p0 >= 0.0 && p0 < 1.0) || !(p > 0.0 && p <= 1.0))
    fail(ErrorCode::InvalidLaw, "linear-fractional parameters out of range");
  if (anchors.empty()) fail(ErrorCode::DegenerateInput, "empty anchor list");
  const double b = 1.0 - p;
  double k = p * (1.0 - p0) * std::pow(b, static_cast<double>(anchors.size()) - 1.0);
  for (double a : anchors.values()) {
    const double d = 1.0 - b * a;
    if (!(d > 0.0)) fail(ErrorCode::Pole, "anchor at or beyond the pole 1/(1-p)");
    k /= d;
  }
  ClosedForm cf;
  cf.constant = k;
  cf.pole = b == 0.0 ? kInf : 1.0 / b;
  return cf;
}

// -------------------------------------------------------------------- json

LawSpec parse_law_spec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("law spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::Parse, "law spec must be a JSON object");
  auto number = [&](const char* key) -> double {
    if (!j.contains(key)) fail(ErrorCode::Parse, std::string("law spec is missing \"") + key + "\"");
    if (!j[key].is_number()) fail(ErrorCode::Parse, std::string("\"") + key + "\" must be a number");
    return j[key].get<double>();
  };
  LawSpec s;
  if (!j.contains("type") || !j["type"].is_string()) fail(ErrorCode::Parse, "law spec needs a \"type\" string");
  const std::string type = j["type"];
  s.lambda = j.contains("lambda") ? number("lambda") : 1.0;
  if (type == "explicit") {
    s.kind = LawKind::Explicit;
    if (!j.contains("probs") || !j["probs"].is_array()) fail(ErrorCode::Parse, "explicit law needs a \"probs\" array");
    for (const auto& v : j["probs"]) {
      if (!v.is_number()) fail(ErrorCode::Parse, "\"probs\" entries must be numbers");
      s.probs.push_back(v.get<double>());
    }
  } else if (type == "linear-fractional") {
    s.kind = LawKind::LinearFractional;
    s.p0 = number("p0");
    s.p = number("p");
  } else if (type == "tail-power") {
    s.kind = LawKind::TailPower;
    s.alpha = number("alpha");
    s.scale = number("scale");
    const double cutoff = number("cutoff");
    if (!(cutoff >= 0.0) || cutoff != std::floor(cutoff)) fail(ErrorCode::Parse, "\"cutoff\" must be a non-negative integer");
    s.cutoff = static_cast<std::size_t>(cutoff);
    if (j.contains("mean")) s.mean = number("mean");
    if (j.contains("log_shift")) s.log_shift = number("log_shift");
    if (j.contains("log_power")) s.log_power = number("log_power");
  } else {
    fail(ErrorCode::Parse, "unknown law type \"" + type + "\"");
  }
  return s;
}

std::string to_json(const LawSpec& s) {
  nlohmann::ordered_json j;
  j["type"] = to_string(s.kind);
  switch (s.kind) {
    case LawKind::Explicit: j["probs"] = s.probs; break;
    case LawKind::LinearFractional:
      j["p0"] = s.p0;
      j["p"] = s.p;
      break;
    case LawKind::TailPower:
      j["alpha"] = s.alpha;
      j["scale"] = s.scale;
      j["cutoff"] = s.cutoff;
      j["mean"] = s.mean;
      j["log_shift"] = s.log_shift;
      if (s.log_power) j["log_power"] = *s.log_power;
      break;
  }
  j["lambda"] = s.lambda;
  return j.dump();
}

}  // namespace branchkit

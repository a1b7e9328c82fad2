#include "branchkit/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "branchkit/error.hpp"

namespace branchkit {

bool TruncatedSeries::nonnegative() const {
  return std::all_of(coeffs.begin(), coeffs.end(), [](double c) { return c >= 0.0; });
}

void AnchorList::validate(std::optional<double> radius) const {
  for (double a : anchors_) {
    if (!std::isfinite(a) || a < 0.0 || (radius && a > *radius)) {
      std::ostringstream os;
      os << "anchor " << a << " outside [0, R]";
      fail(ErrorCode::Domain, os.str());
    }
  }
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Converging: return "converging";
    case Verdict::Diverging: return "diverging";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

double eval(const TruncatedSeries& v, double s) {
  if (!std::isfinite(s)) fail(ErrorCode::Domain, "series eval: non-finite argument");
  if (v.radius && std::abs(s) > *v.radius)
    fail(ErrorCode::Domain, "series eval: argument outside the radius of convergence");
  double acc = 0.0;
  for (auto it = v.coeffs.rbegin(); it != v.coeffs.rend(); ++it) acc = acc * s + *it;
  return acc;
}

TruncatedSeries tail_transform(const TruncatedSeries& v, double a) {
  if (v.order() < 1) fail(ErrorCode::DegenerateInput, "tail transform needs order >= 1");
  if (!std::isfinite(a) || a < 0.0 || (v.radius && a > *v.radius))
    fail(ErrorCode::Domain, "tail transform: anchor outside [0, R]");
  const std::size_t n = v.order();
  std::vector<double> u(n);
  // u_k = v_{k+1} + a u_{k+1}
  u[n - 1] = v.coeffs[n];
  for (std::size_t k = n - 1; k-- > 0;) u[k] = v.coeffs[k + 1] + a * u[k + 1];
  double bound = 0.0;
  if (v.tail_bound > 0.0)
    bound = a < 1.0 ? v.tail_bound / (1.0 - a) : std::numeric_limits<double>::infinity();
  return TruncatedSeries(std::move(u), v.radius, bound);
}

namespace {

TruncatedSeries apply_all(const TruncatedSeries& v, const AnchorList& anchors) {
  if (anchors.empty()) fail(ErrorCode::DegenerateInput, "empty anchor list");
  if (anchors.size() > v.order())
    fail(ErrorCode::DegenerateInput, "more anchors than the series order");
  anchors.validate(v.radius);
  TruncatedSeries w = v;
  for (double a : anchors.values()) w = tail_transform(w, a);
  return w;
}

}  // namespace

double multi_tail(const TruncatedSeries& v, const AnchorList& anchors, double s) {
  return eval(apply_all(v, anchors), s);
}

double divided_expansion(const TruncatedSeries& v, const AnchorList& anchors, double s) {
  if (anchors.empty()) fail(ErrorCode::DegenerateInput, "empty anchor list");
  if (anchors.size() > v.order())
    fail(ErrorCode::DegenerateInput, "more anchors than the series order");
  anchors.validate(v.radius);
  double total = eval(v, anchors[0]);
  double product = 1.0;
  TruncatedSeries w = v;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    product *= s - anchors[i];
    w = tail_transform(w, anchors[i]);
    // Newton coefficient at the next anchor, or the remainder term at s.
    const double at = i + 1 < anchors.size() ? anchors[i + 1] : s;
    total += product * eval(w, at);
  }
  return total;
}

namespace {

std::vector<std::size_t> diagnostic_orders(std::size_t budget) {
  std::vector<std::size_t> orders;
  auto push_geometric = [&](double lo, double hi, int count) {
    for (int i = 0; i < count; ++i) {
      const double x = lo * std::pow(hi / lo, count == 1 ? 1.0 : double(i) / (count - 1));
      orders.push_back(static_cast<std::size_t>(std::llround(x)));
    }
  };
  const double half = std::max(2.0, budget / 2.0);
  if (half > 2.0) push_geometric(2.0, half, 16);
  push_geometric(half, static_cast<double>(budget), 9);
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  return orders;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

constexpr double kConvergingBand = 1e-3;
constexpr double kDivergingBand = 5e-2;

// Relative growth of the sequence over the top half of the budget, measured
// against ln N (projected over one squaring of N) and against ln ln N.
void classify(const std::vector<std::size_t>& orders, const std::vector<double>& seq,
              std::size_t budget, double& g_log, double& g_loglog, Verdict& verdict) {
  std::vector<double> lx, llx, y;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (2 * orders[i] < budget || orders[i] < 3) continue;
    lx.push_back(std::log(double(orders[i])));
    llx.push_back(std::log(std::log(double(orders[i]))));
    y.push_back(seq[i]);
  }
  const double scale = std::max(std::abs(seq.back()), 1e-300);
  if (y.size() < 2) {
    g_log = g_loglog = 0.0;
    verdict = Verdict::Inconclusive;
    return;
  }
  g_log = ls_slope(lx, y) * std::log(double(budget)) / scale;
  g_loglog = ls_slope(llx, y) / scale;
  const double hi = std::max(g_log, g_loglog);
  const double lo = std::min(g_log, g_loglog);
  if (hi < kConvergingBand)
    verdict = Verdict::Converging;
  else if (lo > kDivergingBand)
    verdict = Verdict::Diverging;
  else
    verdict = Verdict::Inconclusive;
}

}  // namespace

MomentReport xlogx_diagnostic(const TruncatedSeries& v, double a, unsigned n,
                              std::size_t budget) {
  if (!(a > 0.0) || (v.radius && a > *v.radius))
    fail(ErrorCode::Domain, "xlogx diagnostic: anchor outside (0, R]");
  if (n < 1) fail(ErrorCode::DegenerateInput, "xlogx diagnostic needs n >= 1");
  budget = std::min(budget, v.order());
  // Keep a^N finite for anchors beyond 1.
  if (a > 1.0) budget = std::min(budget, static_cast<std::size_t>(700.0 / std::log(a)));
  if (budget < n + 2) fail(ErrorCode::DegenerateInput, "xlogx diagnostic: budget too small");

  MomentReport rep;
  rep.anchor = a;
  rep.n = n;
  rep.orders = diagnostic_orders(budget);

  // Running partial sums S_N.
  {
    double s = 0.0, apow = a;  // a^k at k = 1
    std::size_t next = 0;
    for (std::size_t k = 1; k <= budget && next < rep.orders.size(); ++k) {
      if (k >= 2)
        s += v.coeffs[k] * apow * std::pow(double(k), double(n) - 1.0) * std::log(double(k));
      apow *= a;
      while (next < rep.orders.size() && rep.orders[next] == k) {
        rep.sums.push_back(s);
        ++next;
      }
    }
    while (rep.sums.size() < rep.orders.size()) rep.sums.push_back(s);
  }

  // Integral route: nabla_a^n of the truncated polynomial, integrated on [0, a].
  for (std::size_t order : rep.orders) {
    if (order < n) {
      rep.integrals.push_back(0.0);
      continue;
    }
    TruncatedSeries w(std::vector<double>(v.coeffs.begin(), v.coeffs.begin() + order + 1),
                      std::nullopt, 0.0);
    for (unsigned i = 0; i < n; ++i) w = tail_transform(w, a);
    double integral = 0.0, apow = a;
    for (std::size_t k = 0; k < w.coeffs.size(); ++k) {
      integral += w.coeffs[k] * apow / double(k + 1);
      apow *= a;
    }
    rep.integrals.push_back(integral);
  }

  classify(rep.orders, rep.sums, budget, rep.sum_growth_log, rep.sum_growth_loglog,
           rep.sum_verdict);
  classify(rep.orders, rep.integrals, budget, rep.integral_growth_log,
           rep.integral_growth_loglog, rep.integral_verdict);
  return rep;
}

}  // namespace branchkit

#pragma once

// Independent oracles and random generators shared by the unit tests. Nothing
// here calls into the library, so agreement with it is a real cross-check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline double poly(const std::vector<double>& c, double x) {
  double s = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) s = s * x + c[k];
  return s;
}

inline double poly_deriv(const std::vector<double>& c, double x) {
  double s = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) s = s * x + static_cast<double>(k) * c[k];
  return s;
}

// v^{(n)}(a) / n! from the coefficients.
inline double taylor_coeff(const std::vector<double>& c, std::size_t n, double a) {
  double s = 0.0;
  for (std::size_t k = n; k < c.size(); ++k) {
    double binom = 1.0;
    for (std::size_t i = 0; i < n; ++i) binom = binom * static_cast<double>(k - i) / static_cast<double>(i + 1);
    s += c[k] * binom * std::pow(a, static_cast<double>(k - n));
  }
  return s;
}

// Nested divided difference (g(x) - g(a)) / (x - a) built as closures.
// Anchors and evaluation point must be pairwise distinct.
inline double nested_dd(const std::function<double(double)>& g, const std::vector<double>& anchors, double s) {
  std::function<double(double)> h = g;
  for (double a : anchors) {
    const double ga = h(a);
    auto prev = h;
    h = [prev, a, ga](double x) { return (prev(x) - ga) / (x - a); };
  }
  return h(s);
}

// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                      int depth = 40) {
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int d) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
          return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, d - 1) + rec(mid, hi, fmid, frm, fhi, right, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), depth);
}

// Classical fixed-step RK4 for dF/dt = lambda (f(F) - F).
inline double rk4_backward(const std::function<double(double)>& f, double lambda, double t, double s,
                           int steps = 4000) {
  const double h = t / steps;
  double y = s;
  auto rhs = [&](double x) { return lambda * (f(x) - x); };
  for (int i = 0; i < steps; ++i) {
    const double k1 = rhs(y), k2 = rhs(y + 0.5 * h * k1), k3 = rhs(y + 0.5 * h * k2), k4 = rhs(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

// Linear-fractional pgf f(s) = p0 + (1-p0) p s / (1 - (1-p) s).
inline double lf_pgf(double p0, double p, double s) { return p0 + (1.0 - p0) * p * s / (1.0 - (1.0 - p) * s); }

// Smallest root of f(x) = x in [0, 1] by bisection on the sign of f(x) - x.
inline double smallest_root(const std::function<double(double)>& f) {
  // Scan for the first sign change of f(x) - x; for m <= 1 there is none below 1.
  double prev = 0.0;
  const int n = 4096;
  for (int i = 1; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    if (f(x) - x <= 0.0 && i < n) {
      double lo = prev, hi = x;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) - mid > 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev = x;
  }
  return 1.0;
}

}  // namespace oracle

namespace gen {

// Hand-rolled generators on a seeded engine; each test draws its own cases.
class Source {
 public:
  explicit Source(std::uint64_t seed) : rng_(seed) {}
  double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  // Polynomial with non-negative coefficients, degree in [lo, hi].
  std::vector<double> poly(int lo = 1, int hi = 10) {
    std::vector<double> c(static_cast<std::size_t>(integer(lo, hi)) + 1);
    for (double& x : c) x = uniform();
    return c;
  }

  // Probability vector on {0..K}, K in [2, kmax], with p_1 < 1.
  std::vector<double> probs(int kmax = 6) {
    std::vector<double> p(static_cast<std::size_t>(integer(2, kmax)) + 1);
    double sum = 0.0;
    for (double& x : p) sum += (x = uniform(0.01, 1.0));
    for (double& x : p) x /= sum;
    return p;
  }

  // Supercritical law with p_0 > 0.
  std::vector<double> supercritical_probs(int kmax = 6) {
    for (;;) {
      std::vector<double> p = probs(kmax);
      double m = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) m += static_cast<double>(k) * p[k];
      if (m > 1.05) return p;
    }
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace gen

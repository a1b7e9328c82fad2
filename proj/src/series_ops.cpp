#include "branchkit/series_ops.hpp"

#include <algorithm>
#include <cmath>

#include "branchkit/error.hpp"

namespace branchkit::ops {

namespace {

inline double at(std::span<const double> a, std::size_t k) {
  return k < a.size() ? a[k] : 0.0;
}

}  // namespace

Coeffs multiply(std::span<const double> a, std::span<const double> b, std::size_t n) {
  Coeffs c(n + 1, 0.0);
  const std::size_t na = std::min(a.size(), n + 1);
  const std::size_t nb = std::min(b.size(), n + 1);
  for (std::size_t i = 0; i < na; ++i) {
    if (a[i] == 0.0) continue;
    const std::size_t lim = std::min(nb, n + 1 - i);
    for (std::size_t j = 0; j < lim; ++j) c[i + j] += a[i] * b[j];
  }
  return c;
}

Coeffs reciprocal(std::span<const double> a, std::size_t n) {
  const double az = at(a, 0);
  if (az == 0.0) fail(ErrorCode::DegenerateInput, "series reciprocal: zero constant term");
  Coeffs b(n + 1, 0.0);
  b[0] = 1.0 / az;
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0.0;
    const std::size_t lim = std::min(k, a.size() - 1);
    for (std::size_t j = 1; j <= lim; ++j) acc += a[j] * b[k - j];
    b[k] = -acc / az;
  }
  return b;
}

Coeffs divide(std::span<const double> a, std::span<const double> b, std::size_t n) {
  const double b0 = at(b, 0);
  if (b0 == 0.0) fail(ErrorCode::DegenerateInput, "series division: zero constant term");
  Coeffs c(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k) {
    double acc = at(a, k);
    const std::size_t lim = std::min(k, b.size() - 1);
    for (std::size_t j = 1; j <= lim; ++j) acc -= b[j] * c[k - j];
    c[k] = acc / b0;
  }
  return c;
}

Coeffs log(std::span<const double> a, std::size_t n) {
  const double az = at(a, 0);
  if (!(az > 0.0)) fail(ErrorCode::Domain, "series log: constant term must be positive");
  Coeffs b(n + 1, 0.0);
  b[0] = std::log(az);
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = static_cast<double>(k) * at(a, k);
    for (std::size_t j = 1; j < k; ++j) acc -= static_cast<double>(j) * b[j] * at(a, k - j);
    b[k] = acc / (static_cast<double>(k) * az);
  }
  return b;
}

Coeffs exp(std::span<const double> a, std::size_t n) {
  Coeffs e(n + 1, 0.0);
  e[0] = std::exp(at(a, 0));
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0.0;
    const std::size_t lim = std::min(k, a.size() - 1);
    for (std::size_t j = 1; j <= lim; ++j) acc += static_cast<double>(j) * a[j] * e[k - j];
    e[k] = acc / static_cast<double>(k);
  }
  return e;
}

Coeffs power(std::span<const double> a, double beta, std::size_t n) {
  const double az = at(a, 0);
  if (!(az > 0.0)) fail(ErrorCode::Domain, "series power: constant term must be positive");
  Coeffs c(n + 1, 0.0);
  c[0] = std::pow(az, beta);
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0.0;
    const std::size_t lim = std::min(k, a.size() - 1);
    for (std::size_t j = 1; j <= lim; ++j)
      acc += ((beta + 1.0) * static_cast<double>(j) - static_cast<double>(k)) * a[j] * c[k - j];
    c[k] = acc / (static_cast<double>(k) * az);
  }
  return c;
}

Coeffs integrate(std::span<const double> a, std::size_t n) {
  Coeffs c(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) c[k] = at(a, k - 1) / static_cast<double>(k);
  return c;
}

Coeffs derivative(std::span<const double> a, std::size_t n) {
  Coeffs c(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k) c[k] = static_cast<double>(k + 1) * at(a, k + 1);
  return c;
}

Coeffs binomial(double beta, std::size_t n) {
  Coeffs c(n + 1, 0.0);
  c[0] = 1.0;
  for (std::size_t k = 1; k <= n; ++k)
    c[k] = c[k - 1] * (static_cast<double>(k) - 1.0 - beta) / static_cast<double>(k);
  return c;
}

Coeffs neg_log1m(std::size_t n) {
  Coeffs c(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) c[k] = 1.0 / static_cast<double>(k);
  return c;
}

Coeffs compose(std::span<const double> outer, std::span<const double> inner, std::size_t n) {
  Coeffs acc(n + 1, 0.0);
  if (outer.empty()) return acc;
  acc[0] = outer.back();
  for (std::size_t j = outer.size() - 1; j-- > 0;) {
    acc = multiply(acc, inner, n);
    acc[0] += outer[j];
  }
  return acc;
}

Coeffs taylor_shift(std::span<const double> poly, double a, std::size_t n) {
  Coeffs work(poly.begin(), poly.end());
  Coeffs out(n + 1, 0.0);
  for (std::size_t j = 0; j <= n && !work.empty(); ++j) {
    // Synthetic division by (x - a): remainder is the current value at a.
    for (std::size_t k = work.size() - 1; k > 0; --k) work[k - 1] += a * work[k];
    out[j] = work[0];
    work.erase(work.begin());
  }
  return out;
}

void rescale(Coeffs& c, double scale) {
  double p = 1.0;
  for (double& x : c) {
    x *= p;
    p *= scale;
  }
}

}  // namespace branchkit::ops

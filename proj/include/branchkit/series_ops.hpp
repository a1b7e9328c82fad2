#pragma once

// Arithmetic on truncated coefficient vectors. Every routine returns n+1
// coefficients (orders 0..n) and treats missing input coefficients as zero.

#include <cstddef>
#include <span>
#include <vector>

namespace branchkit::ops {

using Coeffs = std::vector<double>;

Coeffs multiply(std::span<const double> a, std::span<const double> b, std::size_t n);
Coeffs reciprocal(std::span<const double> a, std::size_t n);  // requires a[0] != 0
Coeffs divide(std::span<const double> a, std::span<const double> b, std::size_t n);
Coeffs log(std::span<const double> a, std::size_t n);         // requires a[0] > 0
Coeffs exp(std::span<const double> a, std::size_t n);
Coeffs power(std::span<const double> a, double beta, std::size_t n);  // a[0] > 0
Coeffs integrate(std::span<const double> a, std::size_t n);  // zero constant term
Coeffs derivative(std::span<const double> a, std::size_t n);

/// Coefficients of (1 - w)^beta.
Coeffs binomial(double beta, std::size_t n);

/// Coefficients of -ln(1 - w) = sum_{k>=1} w^k / k.
Coeffs neg_log1m(std::size_t n);

/// Coefficients of sum_j outer[j] * inner^j, truncated at n, by Horner.
Coeffs compose(std::span<const double> outer, std::span<const double> inner, std::size_t n);

/// Taylor coefficients at `a` of the polynomial with the given coefficients:
/// result[j] = p^{(j)}(a) / j!, j <= n.
Coeffs taylor_shift(std::span<const double> poly, double a, std::size_t n);

/// Replaces c_k by c_k * scale^k.
void rescale(Coeffs& c, double scale);

}  // namespace branchkit::ops

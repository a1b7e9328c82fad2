#pragma once

// Truncated power series and the tail-generating-function operator
//
//   (nabla_a v)(s) = (v(s) - v(a)) / (s - a),   (nabla_a v)(a) = v'(a).
//
// For v(s) = sum_k v_k s^k the coefficients of nabla_a v are
// u_k = sum_{j>=0} a^j v_{j+k+1}, a sum of non-negative terms whenever v_k >= 0
// and a >= 0. Every routine here works on the coefficients, so evaluations at
// or near the anchor never divide by (s - a).

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace branchkit {

struct TruncatedSeries {
  std::vector<double> coeffs;     // v_0 .. v_N
  std::optional<double> radius;   // known radius of convergence R, if any
  // Upper bound on |v(s) - sum_{k<=N} v_k s^k| for |s| <= 1. Zero for
  // polynomials. Infinite when no bound is known.
  double tail_bound = 0.0;

  TruncatedSeries() = default;
  explicit TruncatedSeries(std::vector<double> c,
                           std::optional<double> r = std::nullopt,
                           double bound = 0.0)
      : coeffs(std::move(c)), radius(r), tail_bound(bound) {}

  std::size_t order() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
  bool nonnegative() const;
};

/// Anchors a_1..a_n of an iterated tail transform. Each must lie in [0, R].
class AnchorList {
 public:
  AnchorList() = default;
  AnchorList(std::initializer_list<double> a) : anchors_(a) {}
  explicit AnchorList(std::vector<double> a) : anchors_(std::move(a)) {}

  std::span<const double> values() const { return anchors_; }
  std::size_t size() const { return anchors_.size(); }
  bool empty() const { return anchors_.empty(); }
  double operator[](std::size_t i) const { return anchors_[i]; }

  /// Throws Domain if an anchor is negative or exceeds the radius hint.
  void validate(std::optional<double> radius) const;

 private:
  std::vector<double> anchors_;
};

/// Horner evaluation. Throws Domain when |s| exceeds the radius hint.
double eval(const TruncatedSeries& v, double s);

/// nabla_a v, of order N-1. Throws DegenerateInput for order-0 input.
TruncatedSeries tail_transform(const TruncatedSeries& v, double a);

/// nabla_{a_1}...nabla_{a_n} v evaluated at s.
double multi_tail(const TruncatedSeries& v, const AnchorList& anchors, double s);

/// Newton-form reconstruction of v(s) from the anchors:
/// v(a_1) + sum_{i=2..n} (s-a_1)..(s-a_{i-1}) nabla_{a_1..a_{i-1}} v(a_i)
///        + (s-a_1)..(s-a_n) nabla_{a_1..a_n} v(s).
double divided_expansion(const TruncatedSeries& v, const AnchorList& anchors, double s);

enum class Verdict { Converging, Diverging, Inconclusive };
const char* to_string(Verdict v) noexcept;

struct MomentReport {
  double anchor = 0.0;
  unsigned n = 0;
  std::vector<std::size_t> orders;
  std::vector<double> sums;       // S_N = sum_{2<=k<=N} v_k a^k k^{n-1} ln k
  std::vector<double> integrals;  // I_N = int_0^a nabla_a^n v_{<=N}(x) dx
  // Growth indicators over the top half of the budget: least-squares slope of
  // the sequence against ln N and ln ln N, scaled by the last value.
  double sum_growth_log = 0.0, sum_growth_loglog = 0.0;
  double integral_growth_log = 0.0, integral_growth_loglog = 0.0;
  Verdict sum_verdict = Verdict::Inconclusive;
  Verdict integral_verdict = Verdict::Inconclusive;
  bool verdicts_agree() const { return sum_verdict == integral_verdict; }
};

/// Numerical probe of the moment condition sum_k v_k a^k k^{n-1} ln k < inf
/// and of the equivalent integral condition int_0^a nabla_a^n v < inf, over
/// truncation orders up to `budget` (capped at the series order).
MomentReport xlogx_diagnostic(const TruncatedSeries& v, double a, unsigned n,
                              std::size_t budget);

}  // namespace branchkit

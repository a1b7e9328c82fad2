#pragma once

// Offspring laws of a Markov branching process: particles live an Exp(lambda)
// time and leave a random number of offspring with pgf f(s) = sum_k p_k s^k.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "branchkit/series.hpp"

namespace branchkit {

enum class LawKind { Explicit, LinearFractional, TailPower };
const char* to_string(LawKind k) noexcept;

/// Input description of a law, mirroring the JSON law-spec schema.
struct LawSpec {
  LawKind kind = LawKind::Explicit;
  double lambda = 1.0;
  // explicit
  std::vector<double> probs;
  // linear-fractional: f(s) = p0 + (1-p0) p s / (1 - (1-p) s)
  double p0 = 0.0, p = 1.0;
  // tail-power, with X = 1 - s:
  //   f(s) = 1 - mean X + scale X^(1+alpha) (log_shift + ln(1/X))^(-log_power)
  double alpha = 0.0, scale = 0.0, mean = 1.0, log_shift = 1.0;
  std::optional<double> log_power;  // default 1 when alpha == 0, else 0
  std::size_t cutoff = 256;         // coefficient table and sampling cutoff
};

/// Throws Parse on malformed JSON or missing fields.
LawSpec parse_law_spec(const std::string& json_text);
std::string to_json(const LawSpec& spec);

enum class Regime { Subcritical, Critical, Supercritical, ExtendableSubcritical };
const char* to_string(Regime r) noexcept;

struct FixedPoints {
  double q = 1.0;
  std::optional<double> r;  // absent when there is no second root below R
  Regime regime = Regime::Subcritical;
  double mean = 1.0;
  double f_prime_q = 1.0;
  double gamma_exponent = 0.0;  // lambda (f'(q) - 1)
  double gamma() const;         // e^{gamma_exponent}
};

namespace detail {
class LawModel;
}

class OffspringLaw {
 public:
  OffspringLaw(LawSpec spec, std::shared_ptr<const detail::LawModel> model);

  const LawSpec& spec() const { return spec_; }
  LawKind kind() const { return spec_.kind; }
  double lambda() const { return spec_.lambda; }
  /// f'(1); +inf for infinite-mean laws.
  double mean() const;
  /// Radius of convergence of f; nullopt when f is entire.
  std::optional<double> radius() const;

  double pgf(double x) const;
  double derivative(double x) const;
  /// Taylor coefficients of f at c: f(c + h) = sum_j T_j h^j, j <= n.
  std::vector<double> taylor(double c, std::size_t n) const;
  /// p_0..p_n.
  TruncatedSeries coefficients(std::size_t n) const;
  /// nabla_{a_1}...nabla_{a_k} f(x), the divided difference f[a_1..a_k, x].
  double dd(std::span<const double> anchors, double x) const;
  double dd(std::initializer_list<double> anchors, double x) const;
  /// Taylor coefficients at 0 of nabla_{anchors} f, orders 0..n.
  std::vector<double> dd_series(std::span<const double> anchors, std::size_t n) const;
  /// Coefficients of f(C(s)) truncated at order n.
  std::vector<double> compose(std::span<const double> c, std::size_t n) const;
  /// nabla_1^ones f(1 - X), keeping full accuracy for X below machine epsilon
  /// where the law has a closed form.
  double tail_at_complement(int ones, double X) const;
  /// Offspring probabilities used by the simulator, the last cell carrying any
  /// mass beyond the cutoff. Empty for linear-fractional laws (sampled exactly).
  std::vector<double> sampling_table() const;

  const detail::LawModel& model() const { return *model_; }

 private:
  LawSpec spec_;
  std::shared_ptr<const detail::LawModel> model_;
};

/// Validates the spec and builds the law. Explicit probabilities are
/// renormalized when their sum is within 1e-9 of one.
OffspringLaw make_law(const LawSpec& spec);
OffspringLaw make_explicit(std::vector<double> probs, double lambda = 1.0);
OffspringLaw make_linear_fractional(double p0, double p, double lambda = 1.0);

FixedPoints fixed_points(const OffspringLaw& f);

/// g(s) = f(sq)/q, the law of a supercritical process conditioned on extinction.
OffspringLaw dual_law(const OffspringLaw& f);
/// h(s) = (f(s(1-q)+q) - q)/(1-q), the law of particles with infinite lines of descent.
OffspringLaw success_law(const OffspringLaw& f);

/// nabla_{a_1..a_n} f(s) = constant / (1 - s / pole) for a linear-fractional f.
struct ClosedForm {
  double constant = 0.0;
  double pole = 0.0;  // +inf when p = 1
  double operator()(double s) const;
};
ClosedForm lf_closed_forms(double p0, double p, const AnchorList& anchors);

/// beta = (1 - f'(q)) / (f'(r) - 1); absent without a second root or at criticality.
std::optional<double> beta(const OffspringLaw& f, const FixedPoints& fp);

}  // namespace branchkit

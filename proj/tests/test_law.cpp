#include <cmath>
#include <vector>

#include "branchkit/error.hpp"
#include "branchkit/law.hpp"
#include "branchkit/series.hpp"
#include "doctest.h"
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

double explicit_pgf(const std::vector<double>& p, double s) { return oracle::poly(p, s); }

}  // namespace

TEST_CASE("make_law: explicit (0.2, 0.3, 0.5) has mean 1.3") {
  const OffspringLaw law = make_explicit({0.2, 0.3, 0.5});
  CHECK(law.mean() == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(law.lambda() == 1.0);
}

TEST_CASE("make_law: linear-fractional coefficients are 0.375 * 0.5^(n-1)") {
  const TruncatedSeries c = make_linear_fractional(0.25, 0.5).coefficients(20);
  CHECK(c.coeffs[0] == doctest::Approx(0.25));
  for (std::size_t n = 1; n <= 20; ++n)
    CHECK(c.coeffs[n] == doctest::Approx(0.375 * std::pow(0.5, double(n) - 1.0)).epsilon(1e-14));
}

TEST_CASE("make_law: rejects invalid input") {
  CHECK(throws_code(ErrorCode::InvalidLaw, [] { make_explicit({0.0, 1.0}); }));
  CHECK(throws_code(ErrorCode::InvalidLaw, [] { make_explicit({-0.1, 0.6, 0.5}); }));
  CHECK(throws_code(ErrorCode::InvalidLaw, [] { make_explicit({0.2, 0.3, 0.5}, 0.0); }));
  CHECK(throws_code(ErrorCode::InvalidLaw, [] { make_explicit({0.2, 0.3, 0.5}, -1.0); }));
  CHECK(throws_code(ErrorCode::InvalidLaw, [] { make_explicit({0.2, 0.3, 0.49}); }));
  CHECK(throws_code(ErrorCode::InvalidLaw, [] { make_linear_fractional(1.0, 0.5); }));
  CHECK(throws_code(ErrorCode::InvalidLaw, [] { make_linear_fractional(0.25, 0.0); }));
  CHECK(throws_code(ErrorCode::InvalidLaw, [] { make_linear_fractional(-0.1, 0.5); }));
}

TEST_CASE("make_law: renormalizes sums within 1e-9 of one") {
  const OffspringLaw law = make_explicit({0.2, 0.3, 0.5 + 5e-10});
  const TruncatedSeries c = law.coefficients(2);
  CHECK(c.coeffs[0] + c.coeffs[1] + c.coeffs[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("law spec: JSON round trip and parse errors") {
  const LawSpec s = parse_law_spec(R"({"type":"explicit","probs":[0.2,0.3,0.5],"lambda":2})");
  CHECK(s.kind == LawKind::Explicit);
  CHECK(s.lambda == 2.0);
  CHECK(s.probs == std::vector<double>{0.2, 0.3, 0.5});
  const LawSpec back = parse_law_spec(to_json(s));
  CHECK(back.probs == s.probs);
  CHECK(back.lambda == s.lambda);

  const LawSpec lf = parse_law_spec(R"({"type":"linear-fractional","p0":0.75,"p":0.5,"lambda":1})");
  CHECK(lf.kind == LawKind::LinearFractional);
  CHECK(lf.p0 == 0.75);
  const LawSpec tp = parse_law_spec(R"({"type":"tail-power","alpha":0.5,"scale":0.5,"cutoff":128,"lambda":1})");
  CHECK(tp.kind == LawKind::TailPower);
  CHECK(tp.cutoff == 128);

  CHECK(throws_code(ErrorCode::Parse, [] { parse_law_spec("{not json"); }));
  CHECK(throws_code(ErrorCode::Parse, [] { parse_law_spec(R"({"type":"poisson"})"); }));
  CHECK(throws_code(ErrorCode::Parse, [] { parse_law_spec(R"({"type":"linear-fractional","p0":0.5})"); }));
}

TEST_CASE("fixed_points: explicit (0.2, 0.3, 0.5) is supercritical with q = 0.4") {
  const FixedPoints fp = fixed_points(make_explicit({0.2, 0.3, 0.5}));
  // 0.5 x^2 - 0.7 x + 0.2 = 0
  const double q = (0.7 - std::sqrt(0.49 - 0.4)) / 1.0;
  CHECK(fp.q == doctest::Approx(q).epsilon(1e-14));
  REQUIRE(fp.r);
  CHECK(*fp.r == 1.0);
  CHECK(fp.regime == Regime::Supercritical);
}

TEST_CASE("fixed_points: linear-fractional p0 = 0.75, p = 0.5 has r = p0 / (1 - p)") {
  const FixedPoints fp = fixed_points(make_linear_fractional(0.75, 0.5));
  CHECK(fp.q == 1.0);
  REQUIRE(fp.r);
  CHECK(*fp.r == doctest::Approx(1.5).epsilon(1e-13));
  CHECK(fp.regime == Regime::ExtendableSubcritical);
}

TEST_CASE("fixed_points: critical linear-fractional law") {
  const FixedPoints fp = fixed_points(make_linear_fractional(0.5, 0.5));
  CHECK(fp.q == 1.0);
  CHECK(!fp.r);
  CHECK(fp.regime == Regime::Critical);
  CHECK(fp.gamma() == doctest::Approx(1.0));
}

TEST_CASE("dual_law: explicit (0.2, 0.3, 0.5) gives (0.5, 0.3, 0.2)") {
  const OffspringLaw f = make_explicit({0.2, 0.3, 0.5});
  const OffspringLaw g = dual_law(f);
  const TruncatedSeries c = g.coefficients(2);
  CHECK(c.coeffs[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(c.coeffs[1] == doctest::Approx(0.3).epsilon(1e-13));
  CHECK(c.coeffs[2] == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(g.mean() == doctest::Approx(0.7).epsilon(1e-13));
  CHECK(g.mean() == doctest::Approx(fixed_points(f).f_prime_q).epsilon(1e-13));
}

TEST_CASE("dual_law: linear-fractional p = p0 = 0.25 has mean 1/m") {
  const OffspringLaw g = dual_law(make_linear_fractional(0.25, 0.25));
  CHECK(g.mean() == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("dual_law: needs 0 < q < 1") {
  CHECK(throws_code(ErrorCode::Domain, [] { dual_law(make_explicit({0.0, 0.5, 0.5})); }));
  CHECK(throws_code(ErrorCode::Domain, [] { dual_law(make_explicit({0.5, 0.3, 0.2})); }));
}

TEST_CASE("success_law: explicit (0.2, 0.3, 0.5) gives (0, 0.7, 0.3)") {
  const OffspringLaw h = success_law(make_explicit({0.2, 0.3, 0.5}));
  const TruncatedSeries c = h.coefficients(2);
  CHECK(std::abs(c.coeffs[0]) < 1e-14);
  CHECK(c.coeffs[1] == doctest::Approx(0.7).epsilon(1e-13));
  CHECK(c.coeffs[2] == doctest::Approx(0.3).epsilon(1e-13));
  CHECK(h.mean() == doctest::Approx(1.3).epsilon(1e-13));
}

TEST_CASE("success_law: identity when q = 0, domain error when q = 1") {
  const OffspringLaw h = success_law(make_explicit({0.0, 0.4, 0.6}));
  const TruncatedSeries c = h.coefficients(2);
  CHECK(c.coeffs[1] == doctest::Approx(0.4));
  CHECK(c.coeffs[2] == doctest::Approx(0.6));
  CHECK(throws_code(ErrorCode::Domain, [] { success_law(make_explicit({0.5, 0.3, 0.2})); }));
}

TEST_CASE("lf_closed_forms: one anchor at 1") {
  const ClosedForm c = lf_closed_forms(0.25, 0.5, {1.0});
  for (double s : {0.0, 0.3, 0.9}) CHECK(c(s) == doctest::Approx(0.75 / (1.0 - 0.5 * s)).epsilon(1e-14));
}

TEST_CASE("lf_closed_forms: anchors (q, 1) for p = p0 = 0.25") {
  const double q = 1.0 / 3.0;
  const ClosedForm c = lf_closed_forms(0.25, 0.25, {q, 1.0});
  for (double s : {0.0, 0.3, 0.9}) CHECK(c(s) == doctest::Approx(0.75 / (1.0 - 0.75 * s)).epsilon(1e-13));
}

TEST_CASE("lf_closed_forms: pole at (1 - p) a = 1") {
  CHECK(throws_code(ErrorCode::Pole, [] { lf_closed_forms(0.25, 0.5, {2.0}); }));
}

TEST_CASE("beta: linear-fractional p = p0 = 0.25 is p / (1 - p0) = 1/3") {
  const OffspringLaw f = make_linear_fractional(0.25, 0.25);
  const auto b = beta(f, fixed_points(f));
  REQUIRE(b);
  CHECK(*b == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("beta: quadratic laws sit on the boundary beta = 1") {
  const OffspringLaw f = make_explicit({0.2, 0.3, 0.5});
  CHECK(*beta(f, fixed_points(f)) == doctest::Approx(1.0).epsilon(1e-12));
  const OffspringLaw c = make_linear_fractional(0.5, 0.5);
  CHECK(!beta(c, fixed_points(c)));
}

TEST_CASE("property: fixed points are roots and q is the smallest") {
  gen::Source src(31);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> p = src.probs();
    const OffspringLaw f = make_explicit(p);
    const FixedPoints fp = fixed_points(f);
    CHECK(std::abs(explicit_pgf(p, fp.q) - fp.q) <= 1e-12);
    CHECK(fp.q == doctest::Approx(oracle::smallest_root([&](double x) { return explicit_pgf(p, x); })).epsilon(1e-9));
    for (int j = 0; j < 20; ++j) {
      const double x = fp.q * j / 20.0;
      CHECK(explicit_pgf(p, x) - x > 0.0);
    }
    if (fp.r) {
      CHECK(std::abs(explicit_pgf(p, *fp.r) - *fp.r) <= 1e-12 * std::max(1.0, *fp.r));
      CHECK(*fp.r > fp.q);
    }
    const double m = f.mean();
    if (m < 1.0) CHECK((fp.regime == Regime::Subcritical || fp.regime == Regime::ExtendableSubcritical));
    if (m > 1.0) CHECK(fp.regime == Regime::Supercritical);
  }
}

TEST_CASE("property: dual and success law means") {
  gen::Source src(32);
  for (int i = 0; i < 50; ++i) {
    const OffspringLaw f = make_explicit(src.supercritical_probs());
    const FixedPoints fp = fixed_points(f);
    CHECK(dual_law(f).mean() == doctest::Approx(fp.f_prime_q).epsilon(1e-10));
    CHECK(success_law(f).mean() == doctest::Approx(f.mean()).epsilon(1e-10));
  }
}

TEST_CASE("property: truncated linear-fractional law matches the closed forms") {
  const double p0 = 0.25, p = 0.5;
  const TruncatedSeries v = make_explicit([&] {
    std::vector<double> c = make_linear_fractional(p0, p).coefficients(60).coeffs;
    return c;
  }()).coefficients(60);
  for (const std::vector<double>& anchors : std::vector<std::vector<double>>{{0.0}, {1.0}, {0.5}, {0.5, 1.0}, {1.0, 1.0}}) {
    TruncatedSeries w = v;
    for (double a : anchors) w = tail_transform(w, a);
    const ClosedForm c = lf_closed_forms(p0, p, AnchorList(anchors));
    for (std::size_t k = 0; k <= 10; ++k)
      CHECK(std::abs(w.coeffs[k] - c.constant * std::pow(1.0 / c.pole, double(k))) <= 1e-12);
  }
}

TEST_CASE("property: factorization through the fixed points") {
  const std::vector<OffspringLaw> laws = {make_explicit({0.2, 0.3, 0.5}), make_explicit({0.5, 0.3, 0.2}),
                                          make_linear_fractional(0.75, 0.5), make_linear_fractional(0.25, 0.25),
                                          make_explicit({0.1, 0.2, 0.3, 0.1, 0.3})};
  for (const OffspringLaw& f : laws) {
    const FixedPoints fp = fixed_points(f);
    for (int i = 0; i < 20; ++i) {
      const double s = i / 20.0;
      CHECK(std::abs((f.pgf(s) - s) - (fp.q - s) * (1.0 - f.dd({fp.q}, s))) <= 1e-10);
      if (fp.r) CHECK(std::abs((s - f.pgf(s)) - (*fp.r - s) * (f.dd({*fp.r}, s) - 1.0)) <= 1e-10);
    }
    if (fp.r) {
      CHECK(f.dd({fp.q}, *fp.r) == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(f.dd({*fp.r}, fp.q) == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("property: critical factorization f(s) - s = (1-s)^2 nabla_1^2 f(s)") {
  const std::vector<OffspringLaw> laws = {make_linear_fractional(0.5, 0.5), make_explicit({0.25, 0.5, 0.25}),
                                          make_explicit({0.4, 0.3, 0.2, 0.1})};
  for (const OffspringLaw& f : laws) {
    REQUIRE(fixed_points(f).regime == Regime::Critical);
    for (int i = 0; i < 20; ++i) {
      const double s = i / 20.0;
      CHECK(std::abs((f.pgf(s) - s) - (1.0 - s) * (1.0 - s) * f.dd({1.0, 1.0}, s)) <= 1e-10);
    }
  }
}

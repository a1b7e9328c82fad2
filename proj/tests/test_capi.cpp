// Exercises the shared library through its C header only.

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "branchkit/branchkit.h"
#include "doctest.h"
#include "json.hpp"

using nlohmann::json;

namespace {

struct Law {
  bk_law* h = nullptr;
  ~Law() { bk_law_free(h); }
};

struct Pi {
  bk_pi* h = nullptr;
  ~Pi() { bk_pi_free(h); }
};

json take_json(char* s) {
  json j = json::parse(s);
  bk_free_string(s);
  return j;
}

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::strlen(bk_version()) > 0);
  CHECK(std::string(bk_status_string(BK_OK)) == "ok");
  for (int s = BK_OK; s <= BK_ERR_INTERNAL; ++s) CHECK(std::strlen(bk_status_string(static_cast<bk_status>(s))) > 0);
}

TEST_CASE("construction from JSON and explicit arrays") {
  Law a, b;
  REQUIRE(bk_law_from_json(R"({"type":"explicit","probs":[0.2,0.3,0.5]})", &a.h) == BK_OK);
  const double probs[] = {0.2, 0.3, 0.5};
  REQUIRE(bk_law_explicit(probs, 3, 1.0, &b.h) == BK_OK);
  double fa = 0.0, fb = 0.0, m = 0.0;
  CHECK(bk_law_pgf(a.h, 0.5, &fa) == BK_OK);
  CHECK(bk_law_pgf(b.h, 0.5, &fb) == BK_OK);
  CHECK(fa == doctest::Approx(0.2 + 0.15 + 0.125).epsilon(1e-15));
  CHECK(fa == fb);
  CHECK(bk_law_mean(a.h, &m) == BK_OK);
  CHECK(m == doctest::Approx(1.3).epsilon(1e-15));
  char* text = nullptr;
  REQUIRE(bk_law_to_json(a.h, &text) == BK_OK);
  const json j = take_json(text);
  CHECK(j["type"] == "explicit");
  CHECK(j["probs"].size() == 3);
}

TEST_CASE("invalid input maps to status codes and sets the last error") {
  Law l;
  CHECK(bk_law_from_json("{not json", &l.h) == BK_ERR_PARSE);
  CHECK(l.h == nullptr);
  CHECK(std::strlen(bk_last_error()) > 0);
  CHECK(bk_law_from_json(R"({"type":"explicit","probs":[0.2,0.3,0.49]})", &l.h) == BK_ERR_INVALID_LAW);
  const double neg[] = {0.5, -0.1, 0.6};
  CHECK(bk_law_explicit(neg, 3, 1.0, &l.h) == BK_ERR_INVALID_LAW);
  CHECK(bk_law_linear_fractional(0.5, 0.0, 1.0, &l.h) != BK_OK);
  CHECK(bk_law_from_json(nullptr, &l.h) == BK_ERR_NULL_ARG);
  CHECK(bk_law_pgf(nullptr, 0.5, nullptr) == BK_ERR_NULL_ARG);
}

TEST_CASE("fixed points and classification") {
  Law l;
  REQUIRE(bk_law_linear_fractional(0.75, 0.5, 1.0, &l.h) == BK_OK);
  bk_fixed_points fp{};
  REQUIRE(bk_law_fixed_points(l.h, &fp) == BK_OK);
  CHECK(fp.q == 1.0);
  REQUIRE(fp.has_r);
  CHECK(fp.r == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(fp.regime == BK_EXTENDABLE_SUBCRITICAL);
  CHECK(fp.mean == doctest::Approx(0.5).epsilon(1e-14));
  char* text = nullptr;
  REQUIRE(bk_classify(l.h, &text) == BK_OK);
  const json j = take_json(text);
  CHECK(j["regime"] == "extendable-subcritical");
  CHECK(j["regular"] == true);
}

TEST_CASE("evolution routes agree") {
  Law l;
  REQUIRE(bk_law_linear_fractional(0.25, 0.25, 1.0, &l.h) == BK_OK);
  bk_value ode{}, series{}, inverse{};
  REQUIRE(bk_evolve(l.h, BK_ROUTE_ODE, 1.0, 0.3, 1e-12, &ode) == BK_OK);
  REQUIRE(bk_evolve(l.h, BK_ROUTE_SERIES, 1.0, 0.3, 1e-12, &series) == BK_OK);
  REQUIRE(bk_evolve(l.h, BK_ROUTE_INVERSE, 1.0, 0.3, 1e-12, &inverse) == BK_OK);
  CHECK(std::abs(ode.value - series.value) < 1e-9);
  CHECK(std::abs(ode.value - inverse.value) < 1e-9);
  CHECK(ode.value + ode.complement == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bk_evolve(l.h, BK_ROUTE_ODE, 1.0, 1.5, 1e-12, &ode) == BK_ERR_DOMAIN);
  CHECK(bk_evolve(l.h, static_cast<bk_route>(7), 1.0, 0.3, 1e-12, &ode) != BK_OK);
  double M = 0.0;
  REQUIRE(bk_population_mean(l.h, 2.0, &M) == BK_OK);
  CHECK(M == doctest::Approx(std::exp(4.0)).epsilon(1e-14));
}

TEST_CASE("distribution coefficients") {
  Law l;
  REQUIRE(bk_law_linear_fractional(0.5, 0.5, 1.0, &l.h) == BK_OK);
  std::vector<double> c(33);
  double err = 1.0;
  REQUIRE(bk_distribution(l.h, 1.0, 32, 1e-13, c.data(), &err) == BK_OK);
  bk_value v{};
  REQUIRE(bk_evolve(l.h, BK_ROUTE_ODE, 1.0, 0.0, 1e-13, &v) == BK_OK);
  CHECK(c[0] == doctest::Approx(v.value).epsilon(1e-10));
  double sum = 0.0;
  for (double x : c) sum += x;
  CHECK(sum <= 1.0 + 1e-12);
  CHECK(bk_distribution(l.h, 1.0, 32, 1e-13, nullptr, &err) == BK_ERR_NULL_ARG);
}

TEST_CASE("pi handles") {
  Law l;
  REQUIRE(bk_law_linear_fractional(0.25, 0.25, 1.0, &l.h) == BK_OK);
  Pi p;
  REQUIRE(bk_pi_new(l.h, &p.h) == BK_OK);
  double v = 0.0, rq = 0.0, qr = 0.0, res = 1.0;
  REQUIRE(bk_pi_q(p.h, 0.5, &v) == BK_OK);
  CHECK(v == doctest::Approx(std::log(2.0) / 3.0).epsilon(1e-12));
  REQUIRE(bk_pi_rq_qr(p.h, 0.5, &rq, &qr) == BK_OK);
  CHECK(rq == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(qr == doctest::Approx(0.5).epsilon(1e-12));
  REQUIRE(bk_pi_plain(p.h, 0.0, 0.2, &v) == BK_OK);
  CHECK(v > 0.0);
  CHECK(bk_pi_plain(p.h, 0.2, 0.6, &v) == BK_ERR_DOMAIN);
  REQUIRE(bk_refined_residual(p.h, 1.0, 0.5, &res) == BK_OK);
  CHECK(res < 1e-6);

  Law crit;
  REQUIRE(bk_law_linear_fractional(0.5, 0.5, 1.0, &crit.h) == BK_OK);
  Pi pc;
  REQUIRE(bk_pi_new(crit.h, &pc.h) == BK_OK);
  CHECK(bk_pi_q(pc.h, 0.5, &v) == BK_ERR_DOMAIN);
}

TEST_CASE("limits report") {
  Law l;
  REQUIRE(bk_law_linear_fractional(0.75, 0.5, 1.0, &l.h) == BK_OK);
  char* text = nullptr;
  REQUIRE(bk_limits(l.h, R"({"order":16,"t":[40]})", &text) == BK_OK);
  const json j = take_json(text);
  CHECK(j["regime"] == "extendable-subcritical");
  CHECK(j["subcritical"]["c"].get<double>() == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-10));
  CHECK(j["subcritical"]["psi"].size() == 17);
  CHECK(bk_limits(l.h, "{bad", &text) == BK_ERR_PARSE);
}

TEST_CASE("simulation report is deterministic") {
  Law l;
  REQUIRE(bk_law_explicit(std::vector<double>{0.2, 0.3, 0.5}.data(), 3, 1.0, &l.h) == BK_OK);
  bk_sim_config cfg;
  bk_sim_config_default(&cfg);
  cfg.horizon = 1.0;
  cfg.replicates = 2000;
  cfg.seed = 42;
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(bk_simulate(l.h, &cfg, &a) == BK_OK);
  REQUIRE(bk_simulate(l.h, &cfg, &b) == BK_OK);
  CHECK(std::string(a) == std::string(b));
  const json j = take_json(a);
  bk_free_string(b);
  CHECK(j["seed"] == 42);
  CHECK(j["replicates"] == 2000);
  cfg.replicates = 0;
  CHECK(bk_simulate(l.h, &cfg, &a) == BK_ERR_DOMAIN);
}

TEST_CASE("verify suites") {
  Law l;
  REQUIRE(bk_law_linear_fractional(0.5, 0.5, 1.0, &l.h) == BK_OK);
  char* text = nullptr;
  int passed = 0;
  REQUIRE(bk_verify(l.h, "semigroup", nullptr, &text, &passed) == BK_OK);
  const json j = take_json(text);
  CHECK(passed == 1);
  CHECK(j["passed"] == true);
  CHECK(!j["checks"].empty());
  CHECK(bk_verify(l.h, "no-such-suite", nullptr, &text, &passed) != BK_OK);
}

#ifndef BRANCHKIT_H
#define BRANCHKIT_H

/* C interface to branchkit. Every function returns a bk_status; on failure
 * bk_last_error() describes the problem for the calling thread. Strings
 * returned through char** are owned by the caller and released with
 * bk_free_string(). Handles are immutable once built and may be shared
 * between threads. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BK_API __declspec(dllexport)
#else
#define BK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bk_status {
  BK_OK = 0,
  BK_ERR_INVALID_LAW = 1,
  BK_ERR_DOMAIN = 2,
  BK_ERR_DEGENERATE = 3,
  BK_ERR_CONVERGENCE = 4,
  BK_ERR_POLE = 5,
  BK_ERR_UNDERFLOW = 6,
  BK_ERR_PARSE = 7,
  BK_ERR_UNSUPPORTED = 8,
  BK_ERR_IO = 9,
  BK_ERR_NULL_ARG = 10,
  BK_ERR_INTERNAL = 11
} bk_status;

typedef enum bk_regime {
  BK_SUBCRITICAL = 0,
  BK_CRITICAL = 1,
  BK_SUPERCRITICAL = 2,
  BK_EXTENDABLE_SUBCRITICAL = 3
} bk_regime;

typedef enum bk_route { BK_ROUTE_ODE = 0, BK_ROUTE_SERIES = 1, BK_ROUTE_INVERSE = 2 } bk_route;

typedef struct bk_law bk_law;
typedef struct bk_pi bk_pi;

typedef struct bk_fixed_points {
  double q;
  double r; /* valid when has_r */
  int has_r;
  bk_regime regime;
  double mean;
  double f_prime_q;
  double gamma; /* e^{lambda (f'(q) - 1)} */
  double beta;  /* valid when has_beta */
  int has_beta;
} bk_fixed_points;

typedef struct bk_value {
  double value;      /* F_t(s) */
  double complement; /* 1 - F_t(s) */
  double error_estimate;
} bk_value;

typedef struct bk_sim_config {
  double horizon;
  uint64_t replicates;
  uint64_t seed;
  uint64_t population_cap;
  unsigned threads; /* 0: hardware concurrency, capped by BRANCHKIT_THREADS */
  int extinction_conditioned;
  double t_max; /* extinction-conditioned runs only */
} bk_sim_config;

BK_API const char* bk_version(void);
BK_API const char* bk_status_string(bk_status status);
BK_API const char* bk_last_error(void);
BK_API void bk_free_string(char* s);

/* Laws. The JSON form is {"type":"explicit","probs":[...],"lambda":x},
 * {"type":"linear-fractional","p0":x,"p":y,"lambda":z} or
 * {"type":"tail-power","alpha":a,"scale":c,"cutoff":K,"lambda":z, ...}. */
BK_API bk_status bk_law_from_json(const char* json, bk_law** out);
BK_API bk_status bk_law_explicit(const double* probs, size_t n, double lambda, bk_law** out);
BK_API bk_status bk_law_linear_fractional(double p0, double p, double lambda, bk_law** out);
BK_API void bk_law_free(bk_law* law);
BK_API bk_status bk_law_to_json(const bk_law* law, char** json);
BK_API bk_status bk_law_pgf(const bk_law* law, double s, double* out);
BK_API bk_status bk_law_mean(const bk_law* law, double* out);
BK_API bk_status bk_law_fixed_points(const bk_law* law, bk_fixed_points* out);
/* q, r, m, regime, gamma, beta, regularity and x log x flags as JSON. */
BK_API bk_status bk_classify(const bk_law* law, char** json);

/* F_t(s) = E s^{Z_t}. */
BK_API bk_status bk_population_mean(const bk_law* law, double t, double* out);
BK_API bk_status bk_evolve(const bk_law* law, bk_route route, double t, double s, double tol,
                           bk_value* out);
/* P(Z_t = k), k = 0..order, into coeffs[order + 1]. */
BK_API bk_status bk_distribution(const bk_law* law, double t, size_t order, double tol,
                                 double* coeffs, double* error_estimate);

/* pi functions. */
BK_API bk_status bk_pi_new(const bk_law* law, bk_pi** out);
BK_API void bk_pi_free(bk_pi* pi);
BK_API bk_status bk_pi_plain(const bk_pi* pi, double s1, double s2, double* out);
BK_API bk_status bk_pi_q(const bk_pi* pi, double s, double* out);
BK_API bk_status bk_pi_rq_qr(const bk_pi* pi, double s, double* rq, double* qr);
BK_API bk_status bk_refined_residual(const bk_pi* pi, double t, double s, double* residual);

/* Regime-appropriate limit report as JSON. options_json may be NULL or hold
 * any of "order", "t", "theta", "y", "rho". */
BK_API bk_status bk_limits(const bk_law* law, const char* options_json, char** json);

BK_API void bk_sim_config_default(bk_sim_config* config);
BK_API bk_status bk_simulate(const bk_law* law, const bk_sim_config* config, char** json);

/* Suites: semigroup, refined-equation, route-agreement, mc-agreement, all.
 * options_json may be NULL or hold "seed", "reps", "t". */
BK_API bk_status bk_verify(const bk_law* law, const char* suite, const char* options_json,
                           char** json, int* passed);

#ifdef __cplusplus
}
#endif

#endif

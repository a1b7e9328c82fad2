#include "branchkit/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "branchkit/error.hpp"

namespace branchkit {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

OdeResult dormand_prince(const OdeRhs& rhs, std::vector<double> y, double t0,
                         std::span<const double> times, const OdeOptions& opts) {
  const std::size_t n = y.size();
  OdeResult out;
  out.states.reserve(times.size());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);

  double t = t0;
  rhs(t, y, k1);
  double h = opts.initial_step;
  if (h <= 0.0) {
    double ymax = 0.0, dmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = opts.abs_tol + opts.rel_tol * std::abs(y[i]);
      ymax = std::max(ymax, std::abs(y[i]) / sc);
      dmax = std::max(dmax, std::abs(k1[i]) / sc);
    }
    h = (ymax < 1e-5 || dmax < 1e-5) ? 1e-6 : 0.01 * ymax / dmax;
    h = std::min(h, 0.1);
  }

  for (double target : times) {
    if (target < t) fail(ErrorCode::Domain, "ode output times must be increasing");
    while (t < target) {
      if (out.accepted + out.rejected >= opts.max_steps) {
        std::ostringstream os;
        os << "ode step budget exhausted at t=" << t;
        fail(ErrorCode::Convergence, os.str());
      }
      bool last = false;
      const double h_free = h;
      if (t + h >= target) {
        h = target - t;
        last = true;
      }
      if (h <= std::abs(t) * 1e-15 && !last) fail(ErrorCode::Convergence, "ode step size underflow");

      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
      rhs(t + c2 * h, tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
      rhs(t + c3 * h, tmp, k3);
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      rhs(t + c4 * h, tmp, k4);
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      rhs(t + c5 * h, tmp, k5);
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      rhs(t + h, tmp, k6);
      for (std::size_t i = 0; i < n; ++i)
        ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      rhs(t + h, ynew, k7);

      double err = 0.0, err_abs = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e =
            h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sc =
            opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        err = std::max(err, std::abs(e) / sc);
        err_abs = std::max(err_abs, std::abs(e));
      }
      if (!std::isfinite(err)) {
        ++out.rejected;
        h *= 0.25;
        continue;
      }
      if (err <= 1.0) {
        t = last ? target : t + h;
        y.swap(ynew);
        k1.swap(k7);
        out.error_estimate += err_abs;
        ++out.accepted;
      } else {
        ++out.rejected;
      }
      const double factor =
          err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h = (last && err <= 1.0) ? std::max(h_free, h * factor) : h * factor;
    }
    out.states.push_back(y);
  }
  return out;
}

}  // namespace branchkit

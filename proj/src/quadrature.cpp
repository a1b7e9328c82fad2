#include "branchkit/quadrature.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "branchkit/error.hpp"

namespace branchkit {

namespace {

// Kronrod abscissae; odd entries (1, 3, ..., 9) are the 10-point Gauss nodes.
constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525023814, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Piece {
  double a, b, value, error;
  bool operator<(const Piece& o) const { return error < o.error; }
};

Piece gk21(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double fv1[10], fv2[10];
  const double fc = f(center);
  double kronrod = fc * kWgk[10];
  double gauss = 0.0;
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    fv1[j] = f(center - dx);
    fv2[j] = f(center + dx);
    const double sum = fv1[j] + fv2[j];
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  const double mean = 0.5 * kronrod;
  double resasc = kWgk[10] * std::abs(fc - mean);
  for (int j = 0; j < 10; ++j)
    resasc += kWgk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
  resasc *= std::abs(half);
  const double value = kronrod * half;
  double err = std::abs((kronrod - gauss) * half);
  // QUADPACK's error scaling.
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * std::abs(value));
  return {a, b, value, err};
}

}  // namespace

QuadResult gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                         double abs_tol, double rel_tol, int max_intervals) {
  QuadResult out;
  if (a == b) return out;
  std::priority_queue<Piece> heap;
  Piece first = gk21(f, a, b);
  double total = first.value, total_err = first.error;
  heap.push(first);
  out.intervals = 1;
  while (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (out.intervals >= max_intervals) {
      out.converged = false;
      break;
    }
    Piece worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid == worst.a || mid == worst.b) {
      out.converged = false;
      break;
    }
    heap.pop();
    Piece left = gk21(f, worst.a, mid);
    Piece right = gk21(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++out.intervals;
  }
  // Re-sum to shed accumulated rounding from the running updates.
  total = 0.0;
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = total_err;
  if (!std::isfinite(total)) out.converged = false;
  return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 double rel_tol, int max_intervals) {
  QuadResult r = gauss_kronrod(f, a, b, abs_tol, rel_tol, max_intervals);
  if (!r.converged) {
    std::ostringstream os;
    os << "quadrature on [" << a << ", " << b << "] did not converge (estimate " << r.value
       << ", error " << r.error << ")";
    fail(ErrorCode::Convergence, os.str());
  }
  return r.value;
}

}  // namespace branchkit

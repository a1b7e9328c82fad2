#pragma once

#include <optional>
#include <span>
#include <vector>

namespace branchkit::detail {

class LawModel {
 public:
  virtual ~LawModel() = default;
  virtual double mean() const = 0;
  virtual std::optional<double> radius() const = 0;
  virtual double value(double x) const = 0;
  virtual std::vector<double> taylor(double c, std::size_t n) const = 0;
  virtual std::vector<double> coefficients(std::size_t n) const = 0;
  virtual double dd(std::span<const double> anchors, double x) const = 0;
  // Defaults: tail transforms of the coefficient table, Horner composition
  // of the Taylor expansion at C(0).
  virtual std::vector<double> dd_series(std::span<const double> anchors, std::size_t n) const;
  virtual std::vector<double> compose(std::span<const double> c, std::size_t n) const;
  virtual std::vector<double> sampling_table() const = 0;
  // nabla_1^ones f at x = 1 - X, exact in X where the model allows it.
  virtual double tail_at_complement(int ones, double X) const {
    const std::vector<double> a(static_cast<std::size_t>(ones), 1.0);
    return dd(a, 1.0 - X);
  }
};

}  // namespace branchkit::detail

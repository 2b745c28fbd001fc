#pragma once

#include <string>
#include <vector>

namespace frag {

// Bounded measurable f on [0, 1]: either piecewise constant on a partition of
// [0, 1] or a polynomial with nonnegative coefficients. Outside [0, 1] the
// value is 0. Piecewise intervals are half-open [x_i, x_{i+1}) except that
// u = 1 belongs to the last one.
class TestFunction {
 public:
  enum class Kind { piecewise, polynomial };

  static TestFunction one();
  static TestFunction identity();
  static TestFunction constant(double v);
  // 1 on [lo, hi) (and at u = 1 when hi == 1).
  static TestFunction indicator(double lo, double hi);
  // breaks must start at 0, end at 1, strictly increase; values.size() + 1 ==
  // breaks.size().
  static TestFunction piecewise(std::vector<double> breaks, std::vector<double> values);
  // coeffs[j] multiplies u^j; all coefficients must be >= 0.
  static TestFunction polynomial(std::vector<double> coeffs);
  // n equal-width indicator bins [k/n, (k+1)/n).
  static std::vector<TestFunction> equal_bins(int n = 16);
  // Default library: the 16 bins plus f == 1 and f(u) = u.
  static std::vector<TestFunction> default_library();

  double operator()(double u) const;
  double bound() const { return bound_; }
  const std::string& id() const { return id_; }

  Kind kind() const { return kind_; }
  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& coeffs() const { return coeffs_; }

 private:
  TestFunction() = default;

  Kind kind_ = Kind::piecewise;
  std::vector<double> breaks_;
  std::vector<double> values_;
  std::vector<double> coeffs_;
  double bound_ = 0.0;
  std::string id_;
};

}  // namespace frag

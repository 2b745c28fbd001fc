#pragma once

#include <memory>

#include "frag/dislocation.hpp"

namespace frag {

// Everything below the lower index is out of the exponent's domain. Discrete
// and truncated-density measures are actually fine down to -1, so the default
// sits just above it.
inline constexpr double kDefaultPLower = -1.0 + 1e-9;

// Laplace exponent of the tagged-fragment subordinator,
//   phi(p) = integral of (1 - sum_i s_i^(1+p)).
// Strictly increasing and concave in p; raises below_lower_index for
// p <= p_lower.
double phi(const DislocationMeasure& nu, double p, double p_lower = kDefaultPLower);

// phi'(p) = integral of sum_i s_i^(1+p) log(1/s_i).
double phi_prime(const DislocationMeasure& nu, double p, double p_lower = kDefaultPLower);

// Malthusian parameter: the root of phi on (p_lower, 0]. Exactly 0 for
// conservative measures; raises no_malthusian_root when phi stays positive.
double malthusian(const DislocationMeasure& nu, double p_lower = kDefaultPLower,
                  double tol = 1e-12);

// Root of (1 + p) phi'(p) = phi(p) above the Malthusian parameter; governs
// the a.s. decay rate of the largest fragment. Raises no_biggins_root when
// no sign change is found.
double biggins_threshold(const DislocationMeasure& nu, double p_lower = kDefaultPLower,
                         double tol = 1e-10);

// phi(lambda + p) - phi(p): the Laplace exponent of the p-tilted
// subordinator net of killing. Both lambda + p and p must exceed p_lower.
double tilted_exponent(const DislocationMeasure& nu, double p, double lambda,
                       double p_lower = kDefaultPLower);

struct AssumptionReport {
  bool conservative = false;
  // A1: finite mean log fragment size at p = 0+.
  bool a1 = false;
  double phi_prime_at_zero = 0.0;
  // A2: a Malthusian parameter exists.
  bool a2 = false;
  double p_star = 0.0;
  // A3: p0-th moment of sum_i s_i^(1+p*) is finite for some p0 in (1, 2].
  bool a3 = false;
  double a3_p0 = 0.0;
  double a3_value = 0.0;
  double phi_at_zero = 0.0;
};

AssumptionReport assumption_report(const DislocationMeasure& nu,
                                   double p_lower = kDefaultPLower);

// Frozen per-measure context: the roots and assumption flags every
// downstream module keeps asking for.
class ExponentContext {
 public:
  static ExponentContext build(std::shared_ptr<const DislocationMeasure> nu,
                               double p_lower = kDefaultPLower, double root_tol = 1e-12);

  const DislocationMeasure& measure() const { return *measure_; }
  std::shared_ptr<const DislocationMeasure> measure_ptr() const { return measure_; }
  double p_lower() const { return p_lower_; }
  double p_star() const { return p_star_; }
  double p_bar() const { return p_bar_; }
  double phi_at_zero() const { return phi_at_zero_; }
  bool conservative() const { return conservative_; }
  const AssumptionReport& assumptions() const { return assumptions_; }

  double phi(double p) const { return frag::phi(*measure_, p, p_lower_); }
  double phi_prime(double p) const { return frag::phi_prime(*measure_, p, p_lower_); }
  double tilted(double p, double lambda) const {
    return frag::tilted_exponent(*measure_, p, lambda, p_lower_);
  }

 private:
  std::shared_ptr<const DislocationMeasure> measure_;
  double p_lower_ = kDefaultPLower;
  double p_star_ = 0.0;
  double p_bar_ = 0.0;
  double phi_at_zero_ = 0.0;
  bool conservative_ = false;
  AssumptionReport assumptions_;
};

}  // namespace frag

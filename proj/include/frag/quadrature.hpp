#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace frag {

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  std::size_t limit = 10000;  // max adaptive subdivisions
};

// Adaptive Gauss-Kronrod integral of f over [a, b]. Raises non_integrable
// when the integrator reports divergence, hits the subdivision limit, or the
// result is not finite.
double integrate_interval(const std::function<double(double)>& f, double a, double b,
                          const QuadratureOptions& opts = {});

// Variant that tolerates integrable endpoint singularities.
double integrate_interval_singular(const std::function<double(double)>& f, double a, double b,
                                   const QuadratureOptions& opts = {});

// Variant with known interior breakpoints (kinks or jumps of the integrand).
// `points` need not be sorted; entries outside (a, b) are ignored.
double integrate_with_breakpoints(const std::function<double(double)>& f, double a, double b,
                                  std::vector<double> points, const QuadratureOptions& opts = {});

// Non-adaptive 15-point Gauss-Kronrod rule on [a, b]; used for cumulative
// tables where the caller controls panel size.
double gauss_kronrod_15(const std::function<double(double)>& f, double a, double b);

}  // namespace frag

#include "frag/exponent.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "frag/errors.hpp"

namespace frag {
namespace {

void require_above_lower(double p, double p_lower, const char* what) {
  if (!(p > p_lower)) {
    raise(Errc::below_lower_index, std::string(what) + " needs p > " + std::to_string(p_lower) +
                                       ", got " + std::to_string(p));
  }
}

double tilted_mass(const SplitView& s, double p) {
  double acc = 0.0;
  for (double lt : s.log_terms) acc += std::exp((1.0 + p) * lt);
  return acc;
}

// Bisection with a 200-iteration cap; f must change sign on [lo, hi].
template <class F>
double bisect(F&& f, double lo, double hi, double f_lo) {
  double f_hi = f(hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double f_mid = f(mid);
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  // Return the endpoint with the smaller residual.
  return std::fabs(f_lo) <= std::fabs(f_hi) ? lo : hi;
}

}  // namespace

double phi(const DislocationMeasure& nu, double p, double p_lower) {
  require_above_lower(p, p_lower, "phi");
  return nu.integrate([p](const SplitView& s) { return 1.0 - tilted_mass(s, p); });
}

double phi_prime(const DislocationMeasure& nu, double p, double p_lower) {
  require_above_lower(p, p_lower, "phi_prime");
  return nu.integrate([p](const SplitView& s) {
    double acc = 0.0;
    for (double lt : s.log_terms) acc -= std::exp((1.0 + p) * lt) * lt;
    return acc;
  });
}

double malthusian(const DislocationMeasure& nu, double p_lower, double tol) {
  if (nu.conservative()) return 0.0;
  const double lo = p_lower + 1e-12 * std::max(1.0, std::fabs(p_lower));
  const double f_lo = phi(nu, lo, p_lower);
  if (f_lo >= 0.0) {
    raise(Errc::no_malthusian_root,
          "phi has no root on (p_lower, 0]: phi stays positive down to the lower index");
  }
  const double root = bisect([&](double p) { return phi(nu, p, p_lower); }, lo, 0.0, f_lo);
  if (std::fabs(phi(nu, root, p_lower)) > std::max(tol, 1e-9)) {
    raise(Errc::no_malthusian_root, "bisection failed to resolve the Malthusian root");
  }
  return root;
}

double biggins_threshold(const DislocationMeasure& nu, double p_lower, double tol) {
  const auto gap = [&](double p) {
    return (1.0 + p) * phi_prime(nu, p, p_lower) - phi(nu, p, p_lower);
  };
  // The gap is positive at the Malthusian parameter and eventually negative
  // because phi' decays geometrically while phi tends to the total rate.
  double a = nu.conservative() ? 0.0 : malthusian(nu, p_lower);
  double g_a = gap(a);
  if (g_a <= 0.0) {
    raise(Errc::no_biggins_root, "gap (1+p) phi'(p) - phi(p) not positive at the start point");
  }
  double step = 1.0;
  double b = a + step;
  while (gap(b) > 0.0) {
    a = b;
    g_a = gap(a);
    step *= 2.0;
    b = a + step;
    if (b > 1024.0) {
      raise(Errc::no_biggins_root, "no sign change of (1+p) phi'(p) - phi(p) below p = 1024");
    }
  }
  const double root = bisect(gap, a, b, g_a);
  if (std::fabs(gap(root)) > tol) {
    raise(Errc::no_biggins_root, "bisection failed to resolve the Biggins threshold");
  }
  return root;
}

double tilted_exponent(const DislocationMeasure& nu, double p, double lambda, double p_lower) {
  require_above_lower(p, p_lower, "tilted_exponent");
  require_above_lower(lambda + p, p_lower, "tilted_exponent (lambda + p)");
  return phi(nu, lambda + p, p_lower) - phi(nu, p, p_lower);
}

AssumptionReport assumption_report(const DislocationMeasure& nu, double p_lower) {
  AssumptionReport r;
  r.conservative = nu.conservative();
  r.phi_at_zero = nu.integrate([](const SplitView& s) { return 1.0 - tilted_mass(s, 0.0); });

  // A1 is the finiteness of the mean log jump at the boundary p = 0; evaluate
  // the defining integral directly rather than through phi_prime's domain
  // check so measures with p_lower == 0 still get a verdict.
  try {
    r.phi_prime_at_zero = nu.integrate([](const SplitView& s) {
      double acc = 0.0;
      for (double lt : s.log_terms) acc -= std::exp(lt) * lt;
      return acc;
    });
    r.a1 = std::isfinite(r.phi_prime_at_zero);
  } catch (const Error&) {
    r.a1 = false;
    r.phi_prime_at_zero = std::numeric_limits<double>::infinity();
  }

  try {
    r.p_star = malthusian(nu, p_lower);
    r.a2 = true;
  } catch (const Error&) {
    r.a2 = false;
    r.p_star = std::numeric_limits<double>::quiet_NaN();
  }

  if (r.a2) {
    // Scan p0 downward from 2 and keep the first finite moment.
    const double p_star = r.p_star;
    for (int i = 0; i <= 9; ++i) {
      const double p0 = 2.0 - 0.1 * i;
      try {
        const double v = nu.integrate(
            [&](const SplitView& s) { return std::pow(tilted_mass(s, p_star), p0); });
        if (std::isfinite(v)) {
          r.a3 = true;
          r.a3_p0 = p0;
          r.a3_value = v;
          break;
        }
      } catch (const Error&) {
        continue;
      }
    }
  }
  return r;
}

ExponentContext ExponentContext::build(std::shared_ptr<const DislocationMeasure> nu,
                                       double p_lower, double root_tol) {
  if (!nu) raise(Errc::invalid_argument, "null measure");
  ExponentContext ctx;
  ctx.measure_ = std::move(nu);
  ctx.p_lower_ = p_lower;
  ctx.conservative_ = ctx.measure_->conservative();
  ctx.p_star_ = malthusian(*ctx.measure_, p_lower, root_tol);
  ctx.p_bar_ = biggins_threshold(*ctx.measure_, p_lower);
  ctx.assumptions_ = assumption_report(*ctx.measure_, p_lower);
  ctx.phi_at_zero_ = ctx.assumptions_.phi_at_zero;
  return ctx;
}

}  // namespace frag

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "frag/dislocation.hpp"
#include "frag/exponent.hpp"
#include "frag/testfunction.hpp"

namespace frag {

// Jump law of the p-tilted tagged-fragment subordinator. Jumps are
// x = -log s against the size-biased, tilted kernel; the residual mass of the
// tilt is a killing rate equal to phi(p), so at the Malthusian parameter the
// chain is conservative. The full Laplace exponent satisfies
//   killing_rate + integral of (1 - e^(-lambda x)) = phi(lambda + p).
class TiltedJumpLaw {
 public:
  struct Atom {
    double x;       // jump size, > 0
    double weight;  // rate contribution r * s^(1+p)
  };

  TiltedJumpLaw(std::shared_ptr<const DislocationMeasure> nu, double p,
                double p_lower = kDefaultPLower);

  double tilt() const { return p_; }
  double total_rate() const { return total_rate_; }
  double killing_rate() const { return killing_rate_; }
  bool discrete() const { return !atoms_.empty(); }
  std::span<const Atom> atoms() const { return atoms_; }

  // Integral of (1 - e^(-lambda x)) against the jump measure, evaluated from
  // the jump representation itself (not via phi differences).
  double levy_exponent_no_kill(double lambda) const;

  // True when all jump sizes are commensurable: every pairwise ratio is a
  // rational with denominator at most 1024, to tolerance 1e-9. Density-driven
  // laws are never lattice.
  bool is_lattice() const;

  double sample_jump(RngStream& rng) const;

 private:
  std::shared_ptr<const DislocationMeasure> nu_;
  double p_ = 0.0;
  double p_lower_ = kDefaultPLower;
  double total_rate_ = 0.0;
  double killing_rate_ = 0.0;
  double envelope_ = 0.0;  // rejection envelope for density measures
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
};

struct OvershootSample {
  bool killed = false;
  double passage = 0.0;    // xi at first passage above x
  double overshoot = 0.0;  // passage - x
};

// First-passage overshoot of the tilted subordinator over level x >= 0.
// Killing is reported, never hidden: a killed sample carries infinite
// passage.
OvershootSample overshoot_sample(const TiltedJumpLaw& law, double x, RngStream& rng);

// The limit law rho of the rescaled stopping line: a measure on (0, 1] with
// density proportional to (integral of 1{u > s} s^(1+p*) nu(ds)) / u and
// total mass exactly 1.
class LimitMeasure {
 public:
  LimitMeasure(std::shared_ptr<const DislocationMeasure> nu, double p_star,
               double p_lower = kDefaultPLower);

  double phi_prime_at_p_star() const { return phi_prime_; }
  // rho((0, v]).
  double cdf(double v) const;
  // <rho, f>.
  double pairing(const TestFunction& f) const;
  double min_support() const { return min_support_; }

 private:
  std::shared_ptr<const DislocationMeasure> nu_;
  double p_star_ = 0.0;
  double phi_prime_ = 0.0;
  double min_support_ = 0.0;
  // Exact breakpoint form for discrete measures.
  std::vector<double> breaks_;  // distinct fragment sizes, ascending, then 1
  std::vector<double> inner_;   // inner weight on (breaks_[j], breaks_[j+1]]
};

struct RenewalPoint {
  double x = 0.0;
  std::uint64_t samples = 0;
  double ks = 0.0;  // Kolmogorov-Smirnov distance of e^(-overshoot) from rho
};

// Monte Carlo check of the renewal limit: at each level x, the law of
// e^(-overshoot(x)) under the p*-tilt is compared against rho. Refused with
// lattice_detected for lattice jump laws, where the limit does not hold along
// arbitrary levels.
std::vector<RenewalPoint> renewal_limit_check(std::shared_ptr<const DislocationMeasure> nu,
                                              double p_star, std::span<const double> x_grid,
                                              std::uint64_t samples, std::uint64_t seed,
                                              double p_lower = kDefaultPLower);

struct TaggedCheckPoint {
  double lambda = 0.0;
  double empirical = 0.0;  // mean of e^(-lambda xi_t), killed paths counting 0
  double se = 0.0;
  double target = 0.0;  // e^(-phi(lambda + p) t)
  double z = 0.0;
  std::uint64_t killed = 0;
};

// Simulates the tilted chain (with killing) to time t and compares the
// empirical Laplace transform against the exponent prediction.
std::vector<TaggedCheckPoint> tagged_path_check(std::shared_ptr<const DislocationMeasure> nu,
                                                double p, double t,
                                                std::span<const double> lambdas,
                                                std::uint64_t samples, std::uint64_t seed,
                                                double p_lower = kDefaultPLower);

}  // namespace frag

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "frag/masspart.hpp"
#include "frag/rng.hpp"

namespace frag {

// One sampled dislocation, viewed without copying. Spans stay valid until the
// next sample_view call that uses the same scratch (or, for discrete
// measures, for the lifetime of the measure).
struct SplitView {
  std::span<const double> terms;      // non-increasing, each in (0, 1)
  std::span<const double> log_terms;  // log of each term
  double dust = 0.0;                  // 1 - sum(terms)
};

struct SplitScratch {
  std::vector<double> terms;
  std::vector<double> log_terms;
};

// A dislocation measure: finite total rate, zero mass on the trivial
// partition, and integrable mass deficit. Implementations must be safe for
// concurrent const use.
class DislocationMeasure {
 public:
  struct Atom {
    double rate;
    MassPartition partition;
    std::vector<double> log_terms;
  };

  virtual ~DislocationMeasure() = default;

  virtual double total_rate() const = 0;

  // Draw a partition with probability proportional to its rate.
  virtual SplitView sample_view(RngStream& rng, SplitScratch& scratch) const = 0;
  MassPartition sample(RngStream& rng) const;

  // Integral of h against the measure (not normalized by the total rate).
  virtual double integrate(const std::function<double(const SplitView&)>& h) const = 0;

  // Exact atom list for purely atomic measures; empty otherwise.
  virtual std::span<const Atom> atoms() const { return {}; }
  bool is_discrete() const { return !atoms().empty(); }

  // Smallest positive fragment mass the measure can produce.
  virtual double min_term() const = 0;

  // Upper bound for sum_i s_i^(1+p) over the support; rejection envelope for
  // tilted sampling.
  virtual double tilt_weight_bound(double p) const = 0;

  // Rate of dislocations that shed dust, i.e. measure of {sum s_i < 1}.
  double dust_rate() const;
  bool conservative() const { return dust_rate() < 1e-14; }
};

// Finitely many weighted partitions.
class DiscreteDislocation final : public DislocationMeasure {
 public:
  explicit DiscreteDislocation(std::vector<std::pair<double, MassPartition>> atoms);

  double total_rate() const override { return total_rate_; }
  SplitView sample_view(RngStream& rng, SplitScratch& scratch) const override;
  double integrate(const std::function<double(const SplitView&)>& h) const override;
  std::span<const Atom> atoms() const override { return atoms_; }
  double min_term() const override { return min_term_; }
  double tilt_weight_bound(double p) const override;

 private:
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
  double total_rate_ = 0.0;
  double min_term_ = 1.0;
};

// Family of binary dislocations (a, c(a)) with density g on [1/2, 1). The
// family itself may have infinite total rate near a = 1; truncate() produces
// a usable measure. The child map must be positive, decreasing, and satisfy
// c(a) <= 1 - a.
struct BinaryDensityFamily {
  std::string name;
  std::function<double(double)> g;
  std::function<double(double)> child = [](double a) { return 1.0 - a; };
};

struct TruncationInfo {
  double epsilon = 0.0;
  double total_rate = 0.0;
  // (1/eps) * integral of (1 - s_1) over the full family: bounds the rate of
  // dislocations discarded by the truncation.
  double discarded_rate_bound = 0.0;
};

// Restrict the family to a <= 1 - eps, eps in (0, 1/2). Raises
// non_integrable when the family's mass deficit integral diverges.
std::shared_ptr<DislocationMeasure> truncate(const BinaryDensityFamily& family, double eps,
                                             TruncationInfo* info = nullptr);

// Discrete measures pass through truncation unchanged.
std::shared_ptr<DislocationMeasure> truncate(std::shared_ptr<DislocationMeasure> measure,
                                             double eps, TruncationInfo* info = nullptr);

namespace catalog {

// Conservative binary split into (a, 1 - a), a in [1/2, 1).
std::shared_ptr<DislocationMeasure> binary(double a, double rate = 1.0);

// Dissipative two-fragment split (1/2, 1/4) losing a quarter of the mass.
std::shared_ptr<DislocationMeasure> half_quarter(double rate = 1.0);

std::shared_ptr<DislocationMeasure> from_atoms(
    std::vector<std::pair<double, std::vector<double>>> atoms);

// g == 1, c(a) = 1 - a.
BinaryDensityFamily uniform_binary();

}  // namespace catalog

}  // namespace frag

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "frag/exponent.hpp"
#include "frag/fragsim.hpp"
#include "frag/tagged.hpp"
#include "frag/testfunction.hpp"

namespace frag {

// Empirical pairing <rho_eta, f> = sum_j X_j^(1+p*) f(X_j / eta) over the
// line's fragments.
double empirical_pairing(const StoppingLine& line, double p_star, const TestFunction& f);

// <rho_eta, 1>: the intrinsic martingale mass. Identically 1 for
// conservative measures.
double martingale_mass(const StoppingLine& line, double p_star);

struct ManyToOneOptions {
  std::uint64_t lines = 1000;
  std::uint64_t overshoots = 100000;
  std::uint64_t budget = 100000000;
  int threads = 0;
};

struct ManyToOneResult {
  std::string f_id;
  double lhs = 0.0;  // mean over lines of sum_j X_j^(1+p*) f(X_j)
  double lhs_se = 0.0;
  double rhs = 0.0;  // mean over overshoot samples of f(e^(-passage))
  double rhs_se = 0.0;
  double z = 0.0;    // (lhs - rhs) / pooled se
};

// Both sides of the many-to-one identity at the stopping line eta: the
// genealogical average against the tagged-fragment first-passage average.
// Exact in expectation at every eta, so |z| < 3 is the pass criterion.
std::vector<ManyToOneResult> many_to_one_check(const ExponentContext& ctx, double eta,
                                               std::span<const TestFunction> fns,
                                               std::uint64_t seed,
                                               const ManyToOneOptions& options = {});

struct SllnStep {
  double eta = 0.0;
  double mass = 0.0;  // <rho_eta, 1>
  std::uint64_t fragment_count = 0;
  std::vector<double> pairing;  // <rho_eta, f> per test function
  std::vector<double> ratio;    // pairing / <rho, f>
};

struct SllnTrajectory {
  std::uint32_t replica = 0;
  std::uint64_t seed = 0;
  std::vector<SllnStep> steps;
};

struct SllnOptions {
  std::uint64_t budget = 100000000;
  int threads = 0;
};

struct SllnResult {
  std::vector<double> limit_pairing;  // <rho, f> per test function
  std::vector<SllnTrajectory> trajectories;
};

// For each replica, walk the eta schedule by monotone refinement of a single
// line and record pairings against every f. The schedule must be strictly
// decreasing within (0, 1].
SllnResult slln_experiment(const ExponentContext& ctx, std::span<const TestFunction> fns,
                           std::span<const double> eta_schedule, std::uint32_t replicas,
                           std::uint64_t seed, const SllnOptions& options = {});

}  // namespace frag

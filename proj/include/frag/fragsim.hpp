#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "frag/dislocation.hpp"
#include "frag/errors.hpp"
#include "frag/rng.hpp"

namespace frag {

// A block either frozen on a stopping line or alive in a population.
// path_id keys the block's random stream: re-simulating from the same block
// reproduces its subtree, which is what makes refinement a refinement.
struct Fragment {
  std::uint64_t path_id = 0;
  double log_mass = 0.0;
  double birth_time = 0.0;
  double freeze_time = 0.0;  // equals birth_time: a block is frozen at creation
  std::uint32_t depth = 0;
  std::int64_t ancestor = -1;  // genealogy node of the parent block, -1 if none
  bool frozen = false;

  double mass() const { return std::exp(log_mass); }
};

// One dislocation event in a retained genealogy. Segment durations along a
// lineage are recovered from consecutive birth times.
struct GenealogyNode {
  std::int64_t parent = -1;
  double log_mass = 0.0;
  double birth_time = 0.0;
};

struct DustLedger {
  std::uint64_t events = 0;
  double mass = 0.0;
};

struct AbsorbedLedger {
  std::uint64_t count = 0;
  double mass = 0.0;
};

struct SimOptions {
  std::uint64_t budget = 100000000;  // max fragments created per walk
  bool retain_genealogy = false;
};

// Fragments frozen at the first moment their mass drops strictly below eta.
class StoppingLine {
 public:
  double eta = 1.0;
  std::uint64_t line_seed = 0;
  std::uint64_t fragments_created = 0;
  std::vector<Fragment> fragments;
  DustLedger dust;
  std::shared_ptr<std::vector<GenealogyNode>> genealogy;  // null unless retained

  double mass_sum() const {
    double acc = 0.0;
    for (const Fragment& f : fragments) acc += f.mass();
    return acc;
  }
};

struct Population {
  double time = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t fragments_created = 0;
  std::vector<Fragment> alive;
  AbsorbedLedger absorbed;
  DustLedger dust;

  // Largest alive mass; 0 when everything was absorbed.
  double largest_mass() const {
    double best = -std::numeric_limits<double>::infinity();
    for (const Fragment& f : alive) best = std::max(best, f.log_mass);
    return alive.empty() ? 0.0 : std::exp(best);
  }
};

namespace detail {

struct WalkItem {
  std::uint64_t path_id;
  double log_mass;
  double birth_time;
  std::uint32_t depth;
  std::int64_t ancestor;
};

// Depth-first walk of the fragmentation tree down to the stopping line at
// eta. Each block's holding time and dislocation come from a stream keyed by
// its path id, so the walk is independent of traversal order and a resumed
// walk (refinement) reproduces the paths a deeper direct walk would take.
// Returns the updated created-fragment count.
template <class FrozenSink>
std::uint64_t walk_stopping_line(const DislocationMeasure& nu, double eta,
                                 std::vector<WalkItem>& stack, FrozenSink&& frozen,
                                 DustLedger* dust, std::vector<GenealogyNode>* genealogy,
                                 std::uint64_t budget, std::uint64_t created) {
  const double rate = nu.total_rate();
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    raise(Errc::invalid_argument, "dislocation measure must have positive finite total rate");
  }
  const double log_eta = std::log(eta);
  SplitScratch scratch;
  while (!stack.empty()) {
    const WalkItem item = stack.back();
    stack.pop_back();
    RngStream rng(derive_stream(item.path_id, kTagFragmentStream));
    const double split_time = item.birth_time + rng.exponential(rate);
    const SplitView split = nu.sample_view(rng, scratch);
    std::int64_t node = -1;
    if (genealogy) {
      node = static_cast<std::int64_t>(genealogy->size());
      genealogy->push_back({item.ancestor, item.log_mass, item.birth_time});
    }
    if (dust && split.dust > 0.0) {
      dust->events += 1;
      dust->mass += std::exp(item.log_mass) * split.dust;
    }
    for (std::size_t i = 0; i < split.log_terms.size(); ++i) {
      if (++created > budget) {
        raise(Errc::budget_exceeded,
              "fragment budget of " + std::to_string(budget) + " exceeded");
      }
      const double lm = item.log_mass + split.log_terms[i];
      const std::uint64_t child = derive_stream(item.path_id, static_cast<std::uint64_t>(i) + 1);
      if (lm < log_eta) {
        frozen(Fragment{child, lm, split_time, split_time, item.depth + 1, node, true});
      } else {
        stack.push_back(WalkItem{child, lm, split_time, item.depth + 1, node});
      }
    }
  }
  return created;
}

}  // namespace detail

// Simulate the stopping line at eta from a unit block. eta >= 1 yields the
// unit block itself, frozen at time 0.
StoppingLine stopping_line(const DislocationMeasure& nu, double eta, std::uint64_t seed,
                           const SimOptions& options = {});

// Monotone refinement: fragments already below eta_prime are carried over
// unchanged; the rest are fragmented further. Requires eta_prime <= line.eta.
// No new seed: the line's per-fragment streams already determine the deeper
// randomness, and the result is pathwise the line a direct simulation at
// eta_prime with the same seed would produce.
StoppingLine refine(const StoppingLine& line, double eta_prime, const DislocationMeasure& nu,
                    const SimOptions& options = {});

// Run every dislocation up to time t. Blocks whose mass falls strictly below
// floor_mass are moved to the absorbed ledger.
Population simulate_until(const DislocationMeasure& nu, double t, double floor_mass,
                          std::uint64_t seed, const SimOptions& options = {});

// Additive martingale sum_i X_i(t)^(1+p) * exp(phi(p) t) over alive blocks.
double additive_martingale(const Population& pop, double p, double phi_p);

// Freeze times of the self-similar process of index alpha obtained from the
// homogeneous one by the lineage time change: each ancestral segment of
// duration dt spent at mass m contributes dt * m^alpha. Requires a retained
// genealogy; masses are untouched. Order matches line.fragments.
std::vector<double> self_similar_freeze_times(const StoppingLine& line, double alpha);

}  // namespace frag

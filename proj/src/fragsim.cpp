#include "frag/fragsim.hpp"

#include <algorithm>

namespace frag {

namespace {

Fragment unit_block(std::uint64_t line_seed) {
  Fragment f;
  f.path_id = derive_stream(line_seed, kTagRootFragment);
  f.log_mass = 0.0;
  f.birth_time = 0.0;
  f.freeze_time = 0.0;
  f.depth = 0;
  f.ancestor = -1;
  f.frozen = true;
  return f;
}

}  // namespace

StoppingLine stopping_line(const DislocationMeasure& nu, double eta, std::uint64_t seed,
                           const SimOptions& options) {
  if (!(eta > 0.0)) raise(Errc::invalid_argument, "eta must be positive");
  StoppingLine line;
  line.eta = eta;
  line.line_seed = seed;
  if (options.retain_genealogy) line.genealogy = std::make_shared<std::vector<GenealogyNode>>();
  if (eta >= 1.0) {
    // Everything of mass >= eta is already below the root: the line is the
    // unit block, frozen at time zero.
    line.fragments.push_back(unit_block(seed));
    return line;
  }
  std::vector<detail::WalkItem> stack;
  stack.push_back({derive_stream(seed, kTagRootFragment), 0.0, 0.0, 0, -1});
  line.fragments_created = detail::walk_stopping_line(
      nu, eta, stack, [&](const Fragment& f) { line.fragments.push_back(f); }, &line.dust,
      line.genealogy ? line.genealogy.get() : nullptr, options.budget, 0);
  return line;
}

StoppingLine refine(const StoppingLine& line, double eta_prime, const DislocationMeasure& nu,
                    const SimOptions& options) {
  if (!(eta_prime > 0.0)) raise(Errc::invalid_argument, "eta must be positive");
  if (eta_prime > line.eta) {
    raise(Errc::invalid_argument, "refinement target must not exceed the current eta");
  }
  StoppingLine out;
  out.eta = eta_prime;
  out.line_seed = line.line_seed;
  out.fragments_created = line.fragments_created;
  out.dust = line.dust;
  if (line.genealogy) {
    out.genealogy = std::make_shared<std::vector<GenealogyNode>>(*line.genealogy);
  } else if (options.retain_genealogy && line.eta < 1.0) {
    raise(Errc::genealogy_missing,
          "refinement cannot retain a genealogy the source line did not record");
  } else if (options.retain_genealogy) {
    out.genealogy = std::make_shared<std::vector<GenealogyNode>>();
  }
  if (eta_prime >= 1.0) {
    // Only reachable from a unit line (eta_prime <= line.eta); carry it over.
    out.fragments = line.fragments;
    return out;
  }

  const double log_eta = std::log(eta_prime);
  std::vector<detail::WalkItem> stack;
  for (const Fragment& f : line.fragments) {
    if (f.log_mass < log_eta) {
      out.fragments.push_back(f);
    } else {
      stack.push_back({f.path_id, f.log_mass, f.birth_time, f.depth, f.ancestor});
    }
  }
  out.fragments_created = detail::walk_stopping_line(
      nu, eta_prime, stack, [&](const Fragment& f) { out.fragments.push_back(f); }, &out.dust,
      out.genealogy ? out.genealogy.get() : nullptr, options.budget, out.fragments_created);
  return out;
}

Population simulate_until(const DislocationMeasure& nu, double t, double floor_mass,
                          std::uint64_t seed, const SimOptions& options) {
  if (!(t >= 0.0)) raise(Errc::invalid_argument, "time horizon must be nonnegative");
  if (!(floor_mass >= 0.0 && floor_mass < 1.0)) {
    raise(Errc::invalid_argument, "mass floor must lie in [0, 1)");
  }
  const double rate = nu.total_rate();
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    raise(Errc::invalid_argument, "dislocation measure must have positive finite total rate");
  }
  Population pop;
  pop.time = t;
  pop.seed = seed;
  const double log_floor =
      floor_mass > 0.0 ? std::log(floor_mass) : -std::numeric_limits<double>::infinity();

  SplitScratch scratch;
  std::vector<detail::WalkItem> stack;
  stack.push_back({derive_stream(seed, kTagRootFragment), 0.0, 0.0, 0, -1});
  std::uint64_t created = 0;
  while (!stack.empty()) {
    const detail::WalkItem item = stack.back();
    stack.pop_back();
    RngStream rng(derive_stream(item.path_id, kTagFragmentStream));
    const double split_time = item.birth_time + rng.exponential(rate);
    if (split_time > t) {
      pop.alive.push_back(
          Fragment{item.path_id, item.log_mass, item.birth_time, item.birth_time, item.depth,
                   item.ancestor, false});
      continue;
    }
    const SplitView split = nu.sample_view(rng, scratch);
    if (split.dust > 0.0) {
      pop.dust.events += 1;
      pop.dust.mass += std::exp(item.log_mass) * split.dust;
    }
    for (std::size_t i = 0; i < split.log_terms.size(); ++i) {
      if (++created > options.budget) {
        raise(Errc::budget_exceeded,
              "fragment budget of " + std::to_string(options.budget) + " exceeded");
      }
      const double lm = item.log_mass + split.log_terms[i];
      if (lm < log_floor) {
        pop.absorbed.count += 1;
        pop.absorbed.mass += std::exp(lm);
        continue;
      }
      stack.push_back({derive_stream(item.path_id, static_cast<std::uint64_t>(i) + 1), lm,
                       split_time, item.depth + 1, item.ancestor});
    }
  }
  pop.fragments_created = created;
  return pop;
}

double additive_martingale(const Population& pop, double p, double phi_p) {
  double acc = 0.0;
  for (const Fragment& f : pop.alive) acc += std::exp((1.0 + p) * f.log_mass);
  return acc * std::exp(phi_p * pop.time);
}

std::vector<double> self_similar_freeze_times(const StoppingLine& line, double alpha) {
  if (!line.genealogy && line.eta < 1.0 && !line.fragments.empty()) {
    raise(Errc::genealogy_missing, "self-similar times need a line with a retained genealogy");
  }
  const std::vector<GenealogyNode>* nodes = line.genealogy ? line.genealogy.get() : nullptr;
  std::vector<double> out;
  out.reserve(line.fragments.size());
  for (const Fragment& f : line.fragments) {
    double acc = 0.0;
    double end = f.freeze_time;
    std::int64_t node = f.ancestor;
    while (node >= 0) {
      const GenealogyNode& n = (*nodes)[static_cast<std::size_t>(node)];
      acc += (end - n.birth_time) * std::exp(alpha * n.log_mass);
      end = n.birth_time;
      node = n.parent;
    }
    out.push_back(acc);
  }
  return out;
}

}  // namespace frag

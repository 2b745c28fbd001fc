#include "frag/slln.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "frag/parallel.hpp"

namespace frag {

void parallel_for(std::uint64_t n, int threads, const std::function<void(std::uint64_t)>& fn) {
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw > 0 ? static_cast<int>(hw) : 1;
  }
  if (threads == 1 || n <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = static_cast<int>(std::min<std::uint64_t>(n, static_cast<std::uint64_t>(threads)));
  pool.reserve(count);
  for (int i = 0; i < count; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double empirical_pairing(const StoppingLine& line, double p_star, const TestFunction& f) {
  const double log_eta = std::log(line.eta);
  double acc = 0.0;
  for (const Fragment& frag : line.fragments) {
    acc += std::exp((1.0 + p_star) * frag.log_mass) * f(std::exp(frag.log_mass - log_eta));
  }
  return acc;
}

double martingale_mass(const StoppingLine& line, double p_star) {
  double acc = 0.0;
  for (const Fragment& frag : line.fragments) {
    acc += std::exp((1.0 + p_star) * frag.log_mass);
  }
  return acc;
}

std::vector<ManyToOneResult> many_to_one_check(const ExponentContext& ctx, double eta,
                                               std::span<const TestFunction> fns,
                                               std::uint64_t seed,
                                               const ManyToOneOptions& options) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    raise(Errc::invalid_argument, "many-to-one check needs eta in (0, 1]");
  }
  if (fns.empty()) raise(Errc::invalid_argument, "many-to-one check needs test functions");
  if (options.lines < 2 || options.overshoots < 2) {
    raise(Errc::invalid_argument, "need at least two lines and two overshoot samples");
  }
  const double p_star = ctx.p_star();
  const std::size_t nf = fns.size();

  // Genealogical side: one streamed walk per line, no fragment storage.
  std::vector<std::vector<double>> per_line(options.lines, std::vector<double>(nf, 0.0));
  parallel_for(options.lines, options.threads, [&](std::uint64_t r) {
    const std::uint64_t line_seed = derive_stream(replica_seed(seed, r), kTagLine);
    std::vector<double>& acc = per_line[r];
    std::vector<detail::WalkItem> stack;
    stack.push_back({derive_stream(line_seed, kTagRootFragment), 0.0, 0.0, 0, -1});
    detail::walk_stopping_line(
        ctx.measure(), eta, stack,
        [&](const Fragment& f) {
          const double mass = std::exp(f.log_mass);
          const double w = std::exp((1.0 + p_star) * f.log_mass);
          for (std::size_t j = 0; j < nf; ++j) acc[j] += w * fns[j](mass);
        },
        nullptr, nullptr, options.budget, 0);
  });

  // Tagged-fragment side: first passage of the tilted subordinator over
  // -log eta.
  TiltedJumpLaw law(ctx.measure_ptr(), p_star, ctx.p_lower());
  const double x = -std::log(eta);
  std::vector<std::vector<double>> per_sample(options.overshoots, std::vector<double>(nf, 0.0));
  parallel_for(options.overshoots, options.threads, [&](std::uint64_t i) {
    RngStream rng(derive_stream(replica_seed(seed, i), kTagOvershoot));
    const OvershootSample s = overshoot_sample(law, x, rng);
    const double v = s.killed ? 0.0 : std::exp(-s.passage);
    for (std::size_t j = 0; j < nf; ++j) per_sample[i][j] = fns[j](v);
  });

  std::vector<ManyToOneResult> out(nf);
  for (std::size_t j = 0; j < nf; ++j) {
    double lhs = 0.0;
    for (const auto& row : per_line) lhs += row[j];
    lhs /= static_cast<double>(options.lines);
    double lhs_var = 0.0;
    for (const auto& row : per_line) lhs_var += (row[j] - lhs) * (row[j] - lhs);
    lhs_var /= static_cast<double>(options.lines - 1);

    double rhs = 0.0;
    for (const auto& row : per_sample) rhs += row[j];
    rhs /= static_cast<double>(options.overshoots);
    double rhs_var = 0.0;
    for (const auto& row : per_sample) rhs_var += (row[j] - rhs) * (row[j] - rhs);
    rhs_var /= static_cast<double>(options.overshoots - 1);

    ManyToOneResult& res = out[j];
    res.f_id = fns[j].id();
    res.lhs = lhs;
    res.lhs_se = std::sqrt(lhs_var / static_cast<double>(options.lines));
    res.rhs = rhs;
    res.rhs_se = std::sqrt(rhs_var / static_cast<double>(options.overshoots));
    const double pooled = std::sqrt(res.lhs_se * res.lhs_se + res.rhs_se * res.rhs_se);
    // Agreement to ten significant digits is agreement: a spread this close
    // to the accumulation-rounding floor carries no statistical signal, and
    // dividing by it would amplify bit noise into an arbitrary score.
    const double noise = 1e-11 * std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
    if (std::fabs(lhs - rhs) <= noise) {
      res.z = 0.0;
    } else {
      res.z = pooled > 0.0 ? (lhs - rhs) / pooled : INFINITY;
    }
  }
  return out;
}

SllnResult slln_experiment(const ExponentContext& ctx, std::span<const TestFunction> fns,
                           std::span<const double> eta_schedule, std::uint32_t replicas,
                           std::uint64_t seed, const SllnOptions& options) {
  if (fns.empty()) raise(Errc::invalid_argument, "experiment needs test functions");
  if (eta_schedule.empty()) raise(Errc::invalid_argument, "empty eta schedule");
  for (std::size_t i = 0; i < eta_schedule.size(); ++i) {
    if (!(eta_schedule[i] > 0.0 && eta_schedule[i] <= 1.0)) {
      raise(Errc::invalid_argument, "eta schedule entries must lie in (0, 1]");
    }
    if (i > 0 && !(eta_schedule[i] < eta_schedule[i - 1])) {
      raise(Errc::invalid_argument, "eta schedule must be strictly decreasing");
    }
  }
  if (replicas == 0) raise(Errc::invalid_argument, "need at least one replica");

  SllnResult result;
  LimitMeasure rho(ctx.measure_ptr(), ctx.p_star(), ctx.p_lower());
  result.limit_pairing.reserve(fns.size());
  for (const TestFunction& f : fns) result.limit_pairing.push_back(rho.pairing(f));

  result.trajectories.assign(replicas, SllnTrajectory{});
  const double p_star = ctx.p_star();
  SimOptions sim;
  sim.budget = options.budget;
  parallel_for(replicas, options.threads, [&](std::uint64_t r) {
    SllnTrajectory& traj = result.trajectories[r];
    traj.replica = static_cast<std::uint32_t>(r);
    traj.seed = derive_stream(replica_seed(seed, r), kTagLine);
    StoppingLine line;
    for (std::size_t k = 0; k < eta_schedule.size(); ++k) {
      line = k == 0 ? stopping_line(ctx.measure(), eta_schedule[k], traj.seed, sim)
                    : refine(line, eta_schedule[k], ctx.measure(), sim);
      SllnStep step;
      step.eta = line.eta;
      step.mass = martingale_mass(line, p_star);
      step.fragment_count = line.fragments.size();
      step.pairing.reserve(fns.size());
      step.ratio.reserve(fns.size());
      for (std::size_t j = 0; j < fns.size(); ++j) {
        const double pairing = empirical_pairing(line, p_star, fns[j]);
        step.pairing.push_back(pairing);
        step.ratio.push_back(pairing / result.limit_pairing[j]);
      }
      traj.steps.push_back(std::move(step));
    }
  });
  return result;
}

}  // namespace frag

#include "frag/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>

#include "frag/exponent.hpp"
#include "frag/fragsim.hpp"
#include "frag/jsonwriter.hpp"
#include "frag/parallel.hpp"
#include "frag/slln.hpp"
#include "frag/tagged.hpp"

namespace frag {
namespace {

constexpr double kZBound = 3.0;
constexpr double kSllnDevBound = 0.05;
constexpr double kKsBound = 0.01;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Row-oriented result table rendered as CSV or as a JSON record array.
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  Table& cell(double v) { return raw(fmt17(v), std::isfinite(v)); }
  Table& cell(std::uint64_t v) { return raw(std::to_string(v), true); }
  Table& cell(std::uint32_t v) { return raw(std::to_string(v), true); }
  Table& cell(const std::string& v) { return raw(v, false); }

  void end_row() {
    if (current_.size() != columns_.size()) raise(Errc::internal, "table row width mismatch");
    rows_.push_back(std::move(current_));
    current_.clear();
  }

  std::string to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out += ',';
      out += columns_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += row[i].text;
      }
      out += '\n';
    }
    return out;
  }

  void to_json(JsonWriter& w) const {
    w.begin_array();
    for (const auto& row : rows_) {
      w.begin_object();
      for (std::size_t i = 0; i < row.size(); ++i) {
        w.key(columns_[i]);
        if (row[i].numeric) {
          w.value_raw(row[i].text);
        } else {
          w.value(row[i].text);
        }
      }
      w.end_object();
    }
    w.end_array();
  }

 private:
  struct Cell {
    std::string text;
    bool numeric;  // non-finite doubles render as text in CSV, null in JSON
  };

  Table& raw(std::string text, bool numeric) {
    if (!numeric && (text == "inf" || text == "-inf" || text == "nan" || text == "-nan")) {
      current_.push_back({std::move(text), false});
      // CSV keeps the token; JSON sees a non-numeric cell and quotes it.
      return *this;
    }
    current_.push_back({std::move(text), numeric});
    return *this;
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<Cell> current_;
};

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::io_error, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) raise(Errc::io_error, "failed writing '" + path + "'");
}

void context_summary(JsonWriter& w, const ExponentContext& ctx) {
  w.key("measure_summary");
  w.begin_object();
  w.key("total_rate").value(ctx.measure().total_rate());
  w.key("conservative").value(ctx.conservative());
  w.key("p_star").value(ctx.p_star());
  w.key("p_bar").value(ctx.p_bar());
  w.key("phi_at_zero").value(ctx.phi_at_zero());
  w.end_object();
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double idx = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

RunOutcome emit(const RunConfig& cfg, const std::string& subcommand, const Table* table,
                const std::function<void(JsonWriter&)>& fill_summary, int exit_code) {
  JsonWriter w;
  w.begin_object();
  w.key("subcommand").value(subcommand);
  w.key("exit_code").value(exit_code);
  w.key("config");
  w.begin_object();
  for (const auto& [key, value] : cfg.echo) w.key(key).value(value);
  w.end_object();
  fill_summary(w);
  if (table && cfg.format == OutputFormat::json) {
    w.key("records");
    table->to_json(w);
  }
  w.end_object();

  RunOutcome outcome;
  outcome.exit_code = exit_code;
  outcome.summary = w.take();
  outcome.summary += '\n';
  if (table && cfg.format == OutputFormat::csv) {
    const std::string csv_path = cfg.out + ".csv";
    write_file(csv_path, table->to_csv());
    outcome.files.push_back(csv_path);
  }
  const std::string json_path = cfg.out + ".json";
  write_file(json_path, outcome.summary);
  outcome.files.push_back(json_path);
  return outcome;
}

RunOutcome cmd_phi(const RunConfig& cfg) {
  Table t({"p", "phi", "phi_prime"});
  for (double p : cfg.phi_grid) {
    t.cell(p).cell(phi(*cfg.measure, p, cfg.p_lower)).cell(phi_prime(*cfg.measure, p, cfg.p_lower));
    t.end_row();
  }
  return emit(cfg, "phi", &t, [&](JsonWriter& w) {
    w.key("p_lower").value(cfg.p_lower);
    w.key("total_rate").value(cfg.measure->total_rate());
  }, 0);
}

RunOutcome cmd_malthus(const RunConfig& cfg) {
  const ExponentContext ctx = ExponentContext::build(cfg.measure, cfg.p_lower);
  const AssumptionReport& a = ctx.assumptions();
  const double gap_residual =
      (1.0 + ctx.p_bar()) * ctx.phi_prime(ctx.p_bar()) - ctx.phi(ctx.p_bar());
  return emit(cfg, "malthus", nullptr, [&](JsonWriter& w) {
    context_summary(w, ctx);
    w.key("p_star").value(ctx.p_star());
    w.key("p_bar").value(ctx.p_bar());
    w.key("phi_residual_at_p_star").value(ctx.phi(ctx.p_star()));
    w.key("gap_residual_at_p_bar").value(gap_residual);
    w.key("assumptions");
    w.begin_object();
    w.key("conservative").value(a.conservative);
    w.key("a1_finite_mean_log").value(a.a1);
    w.key("phi_prime_at_zero").value(a.phi_prime_at_zero);
    w.key("a2_malthusian_exists").value(a.a2);
    w.key("a3_moment_finite").value(a.a3);
    w.key("a3_p0").value(a.a3_p0);
    w.key("a3_value").value(a.a3_value);
    w.end_object();
  }, 0);
}

RunOutcome cmd_stopping_line(const RunConfig& cfg) {
  const ExponentContext ctx = ExponentContext::build(cfg.measure, cfg.p_lower);
  SimOptions sim;
  sim.budget = cfg.budget;
  sim.retain_genealogy = cfg.genealogy;
  std::vector<StoppingLine> lines(cfg.replicas);
  parallel_for(cfg.replicas, cfg.threads, [&](std::uint64_t r) {
    lines[r] = stopping_line(*cfg.measure, cfg.eta,
                             derive_stream(replica_seed(cfg.seed, r), kTagLine), sim);
  });

  Table t({"replica", "fragment_id", "mass", "freeze_time", "depth", "weight"});
  const double p_star = ctx.p_star();
  double mass_min = std::numeric_limits<double>::infinity(), mass_max = 0.0, mass_mean = 0.0;
  double dust_mean = 0.0, mart_mean = 0.0;
  std::uint64_t total_fragments = 0;
  for (std::uint32_t r = 0; r < cfg.replicas; ++r) {
    const StoppingLine& line = lines[r];
    for (std::size_t i = 0; i < line.fragments.size(); ++i) {
      const Fragment& f = line.fragments[i];
      t.cell(static_cast<std::uint64_t>(r))
          .cell(static_cast<std::uint64_t>(i))
          .cell(f.mass())
          .cell(f.freeze_time)
          .cell(static_cast<std::uint64_t>(f.depth))
          .cell(std::exp((1.0 + p_star) * f.log_mass));
      t.end_row();
    }
    const double mass_sum = line.mass_sum();
    mass_min = std::min(mass_min, mass_sum);
    mass_max = std::max(mass_max, mass_sum);
    mass_mean += mass_sum;
    dust_mean += line.dust.mass;
    mart_mean += martingale_mass(line, p_star);
    total_fragments += line.fragments.size();
  }
  mass_mean /= cfg.replicas;
  dust_mean /= cfg.replicas;
  mart_mean /= cfg.replicas;

  return emit(cfg, "stopping-line", &t, [&](JsonWriter& w) {
    context_summary(w, ctx);
    w.key("eta").value(cfg.eta);
    w.key("fragments_total").value(total_fragments);
    w.key("mass_sum_mean").value(mass_mean);
    w.key("mass_sum_min").value(mass_min);
    w.key("mass_sum_max").value(mass_max);
    w.key("dust_mass_mean").value(dust_mean);
    w.key("martingale_mass_mean").value(mart_mean);
  }, 0);
}

RunOutcome cmd_martingale(const RunConfig& cfg) {
  if (cfg.replicas < 2) {
    raise(Errc::invalid_argument, "martingale check needs at least 2 replicas");
  }
  const ExponentContext ctx = ExponentContext::build(cfg.measure, cfg.p_lower);
  const double p = cfg.has_sim_tilt ? cfg.sim_tilt : ctx.p_star();
  const double phi_p = ctx.phi(p);
  SimOptions sim;
  sim.budget = cfg.budget;
  std::vector<double> values(cfg.replicas);
  parallel_for(cfg.replicas, cfg.threads, [&](std::uint64_t r) {
    const Population pop =
        simulate_until(*cfg.measure, cfg.horizon, cfg.floor_mass,
                       derive_stream(replica_seed(cfg.seed, r), kTagPopulation), sim);
    values[r] = additive_martingale(pop, p, phi_p);
  });

  Table t({"replica", "t", "p", "value"});
  double mean = 0.0;
  for (std::uint32_t r = 0; r < cfg.replicas; ++r) {
    t.cell(static_cast<std::uint64_t>(r)).cell(cfg.horizon).cell(p).cell(values[r]);
    t.end_row();
    mean += values[r];
  }
  mean /= cfg.replicas;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= cfg.replicas - 1;
  const double se = std::sqrt(var / cfg.replicas);
  // A mean this close to 1 is agreement at the rounding floor (conservative
  // measures at the Malthusian tilt reproduce the mass identically); the
  // ratio would amplify bit noise into an arbitrary score.
  const double z =
      std::fabs(mean - 1.0) <= 1e-11 ? 0.0 : (se > 0.0 ? (mean - 1.0) / se : INFINITY);
  const bool pass = std::fabs(z) < kZBound;

  return emit(cfg, "martingale", &t, [&](JsonWriter& w) {
    context_summary(w, ctx);
    w.key("t").value(cfg.horizon);
    w.key("p").value(p);
    w.key("phi_p").value(phi_p);
    w.key("floor").value(cfg.floor_mass);
    w.key("mean").value(mean);
    w.key("se").value(se);
    w.key("z").value(z);
    w.key("pass").value(pass);
  }, pass ? 0 : 1);
}

RunOutcome cmd_many_to_one(const RunConfig& cfg) {
  const ExponentContext ctx = ExponentContext::build(cfg.measure, cfg.p_lower);
  ManyToOneOptions opts;
  opts.lines = cfg.m21_lines;
  opts.overshoots = cfg.m21_samples;
  opts.budget = cfg.budget;
  opts.threads = cfg.threads;
  const std::vector<ManyToOneResult> results =
      many_to_one_check(ctx, cfg.eta, cfg.fns, cfg.seed, opts);

  Table t({"f_id", "lhs", "lhs_se", "rhs", "rhs_se", "z"});
  double max_abs_z = 0.0;
  for (const ManyToOneResult& r : results) {
    t.cell(r.f_id).cell(r.lhs).cell(r.lhs_se).cell(r.rhs).cell(r.rhs_se).cell(r.z);
    t.end_row();
    if (std::isfinite(r.z)) {
      max_abs_z = std::max(max_abs_z, std::fabs(r.z));
    } else {
      max_abs_z = std::numeric_limits<double>::infinity();
    }
  }
  const bool pass = max_abs_z < kZBound;

  return emit(cfg, "many-to-one", &t, [&](JsonWriter& w) {
    context_summary(w, ctx);
    w.key("eta").value(cfg.eta);
    w.key("passage_level").value(-std::log(cfg.eta));
    w.key("lines").value(cfg.m21_lines);
    w.key("overshoot_samples").value(cfg.m21_samples);
    w.key("max_abs_z").value(max_abs_z);
    w.key("pass").value(pass);
  }, pass ? 0 : 1);
}

RunOutcome cmd_overshoot(const RunConfig& cfg) {
  const ExponentContext ctx = ExponentContext::build(cfg.measure, cfg.p_lower);
  const double p = cfg.has_overshoot_tilt ? cfg.overshoot_tilt : ctx.p_star();
  const TiltedJumpLaw law(cfg.measure, p, cfg.p_lower);

  std::vector<std::vector<OvershootSample>> samples(cfg.x_grid.size());
  for (std::size_t xi = 0; xi < cfg.x_grid.size(); ++xi) {
    samples[xi].resize(cfg.samples);
    const double x = cfg.x_grid[xi];
    parallel_for(cfg.samples, cfg.threads, [&, x, xi](std::uint64_t i) {
      RngStream rng(derive_stream(replica_seed(cfg.seed, i), kTagOvershoot));
      samples[xi][i] = overshoot_sample(law, x, rng);
    });
  }

  Table t({"replica", "x", "passage_value", "overshoot", "exp_neg_overshoot"});
  std::vector<double> mean_exp(cfg.x_grid.size(), 0.0);
  std::vector<std::uint64_t> killed(cfg.x_grid.size(), 0);
  for (std::size_t xi = 0; xi < cfg.x_grid.size(); ++xi) {
    for (std::uint64_t i = 0; i < cfg.samples; ++i) {
      const OvershootSample& s = samples[xi][i];
      const double ev = s.killed ? 0.0 : std::exp(-s.overshoot);
      t.cell(i).cell(cfg.x_grid[xi]).cell(s.passage).cell(s.overshoot).cell(ev);
      t.end_row();
      mean_exp[xi] += ev;
      killed[xi] += s.killed ? 1 : 0;
    }
    mean_exp[xi] /= static_cast<double>(cfg.samples);
  }

  std::vector<RenewalPoint> renewal;
  bool pass = true;
  if (cfg.renewal_check) {
    renewal = renewal_limit_check(cfg.measure, ctx.p_star(), cfg.x_grid, cfg.samples, cfg.seed,
                                  cfg.p_lower);
    for (const RenewalPoint& pt : renewal) pass = pass && pt.ks < kKsBound;
  }

  return emit(cfg, "overshoot", &t, [&](JsonWriter& w) {
    context_summary(w, ctx);
    w.key("p").value(p);
    w.key("killing_rate").value(law.killing_rate());
    w.key("lattice").value(law.is_lattice());
    w.key("levels");
    w.begin_array();
    for (std::size_t xi = 0; xi < cfg.x_grid.size(); ++xi) {
      w.begin_object();
      w.key("x").value(cfg.x_grid[xi]);
      w.key("samples").value(cfg.samples);
      w.key("killed").value(killed[xi]);
      w.key("mean_exp_neg_overshoot").value(mean_exp[xi]);
      if (cfg.renewal_check) {
        w.key("ks_distance").value(renewal[xi].ks);
        w.key("ks_bound").value(kKsBound);
        w.key("pass").value(renewal[xi].ks < kKsBound);
      }
      w.end_object();
    }
    w.end_array();
    if (cfg.renewal_check) w.key("pass").value(pass);
  }, pass ? 0 : 1);
}

RunOutcome cmd_slln(const RunConfig& cfg) {
  const ExponentContext ctx = ExponentContext::build(cfg.measure, cfg.p_lower);
  SllnOptions opts;
  opts.budget = cfg.budget;
  opts.threads = cfg.threads;
  const SllnResult res =
      slln_experiment(ctx, cfg.fns, cfg.eta_schedule, cfg.replicas, cfg.seed, opts);

  Table t({"replica", "eta", "f_id", "pairing", "mass", "limit_pairing", "ratio",
           "fragment_count"});
  for (const SllnTrajectory& traj : res.trajectories) {
    for (const SllnStep& step : traj.steps) {
      for (std::size_t j = 0; j < cfg.fns.size(); ++j) {
        t.cell(static_cast<std::uint64_t>(traj.replica))
            .cell(step.eta)
            .cell(cfg.fns[j].id())
            .cell(step.pairing[j])
            .cell(step.mass)
            .cell(res.limit_pairing[j])
            .cell(step.ratio[j])
            .cell(step.fragment_count);
        t.end_row();
      }
    }
  }

  // Deviation of the ratio from the martingale mass: the SLLN drives it to 0
  // for every f as eta decreases, in both the conservative and dissipative
  // cases.
  const std::size_t steps = cfg.eta_schedule.size();
  std::vector<std::vector<double>> median_dev(steps), q1_dev(steps), q3_dev(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t j = 0; j < cfg.fns.size(); ++j) {
      std::vector<double> devs;
      devs.reserve(res.trajectories.size());
      for (const SllnTrajectory& traj : res.trajectories) {
        devs.push_back(std::fabs(traj.steps[k].ratio[j] - traj.steps[k].mass));
      }
      median_dev[k].push_back(quantile(devs, 0.5));
      q1_dev[k].push_back(quantile(devs, 0.25));
      q3_dev[k].push_back(quantile(devs, 0.75));
    }
  }

  bool pass = true;
  std::vector<bool> final_pass(cfg.fns.size()), monotone(cfg.fns.size());
  const std::size_t window = std::min<std::size_t>(4, steps);
  for (std::size_t j = 0; j < cfg.fns.size(); ++j) {
    final_pass[j] = median_dev[steps - 1][j] < kSllnDevBound;
    monotone[j] = true;
    for (std::size_t k = steps - window + 1; k < steps; ++k) {
      if (median_dev[k][j] > median_dev[k - 1][j] + 1e-12) monotone[j] = false;
    }
    pass = pass && final_pass[j] && monotone[j];
  }

  return emit(cfg, "slln", &t, [&](JsonWriter& w) {
    context_summary(w, ctx);
    w.key("replicas").value(static_cast<std::uint64_t>(cfg.replicas));
    w.key("limit_pairing");
    w.begin_object();
    for (std::size_t j = 0; j < cfg.fns.size(); ++j) {
      w.key(cfg.fns[j].id()).value(res.limit_pairing[j]);
    }
    w.end_object();
    w.key("per_eta");
    w.begin_array();
    for (std::size_t k = 0; k < steps; ++k) {
      w.begin_object();
      w.key("eta").value(cfg.eta_schedule[k]);
      w.key("stats");
      w.begin_array();
      for (std::size_t j = 0; j < cfg.fns.size(); ++j) {
        w.begin_object();
        w.key("f_id").value(cfg.fns[j].id());
        w.key("median_dev").value(median_dev[k][j]);
        w.key("q1_dev").value(q1_dev[k][j]);
        w.key("q3_dev").value(q3_dev[k][j]);
        w.end_object();
      }
      w.end_array();
      w.end_object();
    }
    w.end_array();
    w.key("final");
    w.begin_array();
    for (std::size_t j = 0; j < cfg.fns.size(); ++j) {
      w.begin_object();
      w.key("f_id").value(cfg.fns[j].id());
      w.key("median_dev").value(median_dev[steps - 1][j]);
      w.key("dev_bound").value(kSllnDevBound);
      w.key("final_pass").value(static_cast<bool>(final_pass[j]));
      w.key("monotone").value(static_cast<bool>(monotone[j]));
      w.end_object();
    }
    w.end_array();
    w.key("pass").value(pass);
  }, pass ? 0 : 1);
}

RunOutcome cmd_self_similar(const RunConfig& cfg) {
  SimOptions sim;
  sim.budget = cfg.budget;
  sim.retain_genealogy = true;
  std::vector<StoppingLine> lines(cfg.replicas);
  std::vector<std::vector<double>> times(cfg.replicas);
  parallel_for(cfg.replicas, cfg.threads, [&](std::uint64_t r) {
    lines[r] = stopping_line(*cfg.measure, cfg.eta,
                             derive_stream(replica_seed(cfg.seed, r), kTagLine), sim);
    times[r] = self_similar_freeze_times(lines[r], cfg.alpha);
  });

  Table t({"replica", "fragment_id", "mass", "freeze_time", "alpha_time", "depth"});
  std::uint64_t total = 0;
  for (std::uint32_t r = 0; r < cfg.replicas; ++r) {
    for (std::size_t i = 0; i < lines[r].fragments.size(); ++i) {
      const Fragment& f = lines[r].fragments[i];
      t.cell(static_cast<std::uint64_t>(r))
          .cell(static_cast<std::uint64_t>(i))
          .cell(f.mass())
          .cell(f.freeze_time)
          .cell(times[r][i])
          .cell(static_cast<std::uint64_t>(f.depth));
      t.end_row();
    }
    total += lines[r].fragments.size();
  }

  return emit(cfg, "self-similar-times", &t, [&](JsonWriter& w) {
    w.key("alpha").value(cfg.alpha);
    w.key("eta").value(cfg.eta);
    w.key("fragments_total").value(total);
  }, 0);
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {
      "phi",         "malthus",   "stopping-line", "martingale",
      "many-to-one", "overshoot", "slln",          "self-similar-times"};
  return names;
}

RunOutcome run_dispatch(const std::string& subcommand, const RunConfig& cfg) {
  if (subcommand == "phi") return cmd_phi(cfg);
  if (subcommand == "malthus") return cmd_malthus(cfg);
  if (subcommand == "stopping-line") return cmd_stopping_line(cfg);
  if (subcommand == "martingale") return cmd_martingale(cfg);
  if (subcommand == "many-to-one") return cmd_many_to_one(cfg);
  if (subcommand == "overshoot") return cmd_overshoot(cfg);
  if (subcommand == "slln") return cmd_slln(cfg);
  if (subcommand == "self-similar-times") return cmd_self_similar(cfg);
  std::string known;
  for (const std::string& name : subcommand_names()) {
    if (!known.empty()) known += ", ";
    known += name;
  }
  raise(Errc::invalid_argument, "unknown subcommand '" + subcommand + "' (known: " + known + ")");
}

}  // namespace frag

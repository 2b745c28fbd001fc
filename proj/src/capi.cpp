#include "frag.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "frag/config.hpp"
#include "frag/dislocation.hpp"
#include "frag/errors.hpp"
#include "frag/exponent.hpp"
#include "frag/fragsim.hpp"
#include "frag/masspart.hpp"
#include "frag/rng.hpp"
#include "frag/runner.hpp"
#include "frag/slln.hpp"
#include "frag/tagged.hpp"
#include "frag/testfunction.hpp"

struct frag_measure {
  std::shared_ptr<frag::DislocationMeasure> m;
  double p_lower = frag::kDefaultPLower;
};

struct frag_testfn {
  frag::TestFunction f;
};

struct frag_line {
  frag::StoppingLine line;
  std::shared_ptr<frag::DislocationMeasure> m;
  frag::SimOptions opts;
};

struct frag_jump_law {
  std::shared_ptr<const frag::DislocationMeasure> m;
  frag::TiltedJumpLaw law;
  frag_jump_law(std::shared_ptr<const frag::DislocationMeasure> nu, double p, double p_lower)
      : m(nu), law(m, p, p_lower) {}
};

struct frag_config {
  frag::ConfigDoc doc;
  frag::RunConfig cfg;
};

namespace {

thread_local std::string t_error_message;
thread_local int t_error_line = 0;
thread_local int t_error_column = 0;

void clear_error() {
  t_error_message.clear();
  t_error_line = 0;
  t_error_column = 0;
}

frag_status status_of(frag::Errc code) {
  using frag::Errc;
  switch (code) {
    case Errc::invalid_argument: return FRAG_E_INVALID;
    case Errc::parse_error: return FRAG_E_PARSE;
    case Errc::validation_error: return FRAG_E_VALIDATION;
    case Errc::sum_exceeds_one: return FRAG_E_SUM_EXCEEDS_ONE;
    case Errc::non_integrable: return FRAG_E_NON_INTEGRABLE;
    case Errc::below_lower_index: return FRAG_E_BELOW_LOWER_INDEX;
    case Errc::no_malthusian_root: return FRAG_E_NO_MALTHUSIAN_ROOT;
    case Errc::no_biggins_root: return FRAG_E_NO_BIGGINS_ROOT;
    case Errc::budget_exceeded: return FRAG_E_BUDGET_EXCEEDED;
    case Errc::killed_before_passage: return FRAG_E_KILLED_BEFORE_PASSAGE;
    case Errc::lattice_detected: return FRAG_E_LATTICE_DETECTED;
    case Errc::genealogy_missing: return FRAG_E_GENEALOGY_MISSING;
    case Errc::check_failed: return FRAG_E_CHECK_FAILED;
    case Errc::io_error: return FRAG_E_IO;
    case Errc::internal: return FRAG_E_INTERNAL;
  }
  return FRAG_E_INTERNAL;
}

template <class Fn>
frag_status guard(Fn&& fn) {
  try {
    clear_error();
    fn();
    return FRAG_OK;
  } catch (const frag::Error& e) {
    t_error_message = e.what();
    t_error_line = e.line;
    t_error_column = e.column;
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    t_error_message = "out of memory";
    return FRAG_E_INTERNAL;
  } catch (const std::exception& e) {
    t_error_message = e.what();
    return FRAG_E_INTERNAL;
  } catch (...) {
    t_error_message = "unknown failure";
    return FRAG_E_INTERNAL;
  }
}

frag_status require(bool ok, const char* what) {
  if (ok) return FRAG_OK;
  t_error_message = what;
  t_error_line = 0;
  t_error_column = 0;
  return FRAG_E_INVALID;
}

}  // namespace

extern "C" {

const char* frag_status_name(frag_status status) {
  switch (status) {
    case FRAG_OK: return "Ok";
    case FRAG_E_INVALID: return "InvalidArgument";
    case FRAG_E_PARSE: return "ParseError";
    case FRAG_E_VALIDATION: return "ValidationError";
    case FRAG_E_SUM_EXCEEDS_ONE: return "SumExceedsOne";
    case FRAG_E_NON_INTEGRABLE: return "NonIntegrable";
    case FRAG_E_BELOW_LOWER_INDEX: return "BelowLowerIndex";
    case FRAG_E_NO_MALTHUSIAN_ROOT: return "NoMalthusianRoot";
    case FRAG_E_NO_BIGGINS_ROOT: return "NoBigginsRoot";
    case FRAG_E_BUDGET_EXCEEDED: return "BudgetExceeded";
    case FRAG_E_KILLED_BEFORE_PASSAGE: return "KilledBeforePassage";
    case FRAG_E_LATTICE_DETECTED: return "LatticeDetected";
    case FRAG_E_GENEALOGY_MISSING: return "GenealogyMissing";
    case FRAG_E_CHECK_FAILED: return "CheckFailed";
    case FRAG_E_IO: return "IoError";
    case FRAG_E_INTERNAL: return "Internal";
  }
  return "Internal";
}

const char* frag_version(void) { return "0.1.0"; }

const char* frag_last_error(void) { return t_error_message.c_str(); }
int frag_last_error_line(void) { return t_error_line; }
int frag_last_error_column(void) { return t_error_column; }

/* ---- dislocation measures ---- */

frag_status frag_measure_discrete(size_t n_atoms, const double* rates, const size_t* term_counts,
                                  const double* terms, frag_measure** out) {
  if (frag_status s = require(out && rates && term_counts && terms && n_atoms > 0,
                              "frag_measure_discrete: null argument or empty atom list"))
    return s;
  *out = nullptr;
  return guard([&] {
    std::vector<std::pair<double, std::vector<double>>> atoms;
    atoms.reserve(n_atoms);
    size_t offset = 0;
    for (size_t k = 0; k < n_atoms; ++k) {
      std::vector<double> part(terms + offset, terms + offset + term_counts[k]);
      offset += term_counts[k];
      atoms.emplace_back(rates[k], std::move(part));
    }
    auto handle = std::make_unique<frag_measure>();
    handle->m = frag::catalog::from_atoms(std::move(atoms));
    *out = handle.release();
  });
}

frag_status frag_measure_binary_density(const char* density, double epsilon, frag_measure** out) {
  if (frag_status s = require(out && density, "frag_measure_binary_density: null argument"))
    return s;
  *out = nullptr;
  return guard([&] {
    if (std::strcmp(density, "uniform") != 0) {
      frag::raise(frag::Errc::validation_error,
                  std::string("unknown binary density '") + density + "' (supported: uniform)");
    }
    auto handle = std::make_unique<frag_measure>();
    handle->m = frag::truncate(frag::catalog::uniform_binary(), epsilon);
    *out = handle.release();
  });
}

frag_status frag_measure_set_p_lower(frag_measure* measure, double p_lower) {
  if (frag_status s = require(measure != nullptr, "frag_measure_set_p_lower: null measure"))
    return s;
  return guard([&] {
    if (!(p_lower > -1.0) || !(p_lower <= 0.0)) {
      frag::raise(frag::Errc::invalid_argument, "p_lower must lie in (-1, 0]");
    }
    measure->p_lower = p_lower;
  });
}

void frag_measure_free(frag_measure* measure) { delete measure; }

double frag_measure_total_rate(const frag_measure* measure) {
  return measure ? measure->m->total_rate() : 0.0;
}

int frag_measure_is_discrete(const frag_measure* measure) {
  return measure && measure->m->is_discrete() ? 1 : 0;
}

int frag_measure_is_conservative(const frag_measure* measure) {
  return measure && measure->m->conservative() ? 1 : 0;
}

frag_status frag_measure_sample(const frag_measure* measure, uint64_t seed, size_t capacity,
                                double* terms_out, size_t* n_out, double* dust_out) {
  if (frag_status s = require(measure && n_out && (terms_out || capacity == 0),
                              "frag_measure_sample: null argument"))
    return s;
  return guard([&] {
    frag::RngStream rng(frag::derive_stream(seed, frag::kTagFragmentStream));
    frag::MassPartition part = measure->m->sample(rng);
    const auto& t = part.terms();
    *n_out = t.size();
    for (size_t i = 0; i < t.size() && i < capacity; ++i) terms_out[i] = t[i];
    if (dust_out) *dust_out = part.dust();
  });
}

/* ---- Laplace exponent ---- */

frag_status frag_phi(const frag_measure* measure, double p, double* out) {
  if (frag_status s = require(measure && out, "frag_phi: null argument")) return s;
  return guard([&] { *out = frag::phi(*measure->m, p, measure->p_lower); });
}

frag_status frag_phi_prime(const frag_measure* measure, double p, double* out) {
  if (frag_status s = require(measure && out, "frag_phi_prime: null argument")) return s;
  return guard([&] { *out = frag::phi_prime(*measure->m, p, measure->p_lower); });
}

frag_status frag_malthusian(const frag_measure* measure, double* out) {
  if (frag_status s = require(measure && out, "frag_malthusian: null argument")) return s;
  return guard([&] { *out = frag::malthusian(*measure->m, measure->p_lower); });
}

frag_status frag_biggins_threshold(const frag_measure* measure, double* out) {
  if (frag_status s = require(measure && out, "frag_biggins_threshold: null argument")) return s;
  return guard([&] { *out = frag::biggins_threshold(*measure->m, measure->p_lower); });
}

frag_status frag_tilted_exponent(const frag_measure* measure, double p, double lambda,
                                 double* out) {
  if (frag_status s = require(measure && out, "frag_tilted_exponent: null argument")) return s;
  return guard([&] { *out = frag::tilted_exponent(*measure->m, p, lambda, measure->p_lower); });
}

frag_status frag_assumption_report(const frag_measure* measure, frag_assumptions* out) {
  if (frag_status s = require(measure && out, "frag_assumption_report: null argument")) return s;
  return guard([&] {
    frag::AssumptionReport r = frag::assumption_report(*measure->m, measure->p_lower);
    out->conservative = r.conservative ? 1 : 0;
    out->a1 = r.a1 ? 1 : 0;
    out->phi_prime_at_zero = r.phi_prime_at_zero;
    out->a2 = r.a2 ? 1 : 0;
    out->p_star = r.p_star;
    out->a3 = r.a3 ? 1 : 0;
    out->a3_p0 = r.a3_p0;
    out->a3_value = r.a3_value;
    out->phi_at_zero = r.phi_at_zero;
  });
}

/* ---- test functions ---- */

frag_status frag_testfn_one(frag_testfn** out) {
  if (frag_status s = require(out != nullptr, "frag_testfn_one: null argument")) return s;
  *out = nullptr;
  return guard([&] { *out = new frag_testfn{frag::TestFunction::one()}; });
}

frag_status frag_testfn_identity(frag_testfn** out) {
  if (frag_status s = require(out != nullptr, "frag_testfn_identity: null argument")) return s;
  *out = nullptr;
  return guard([&] { *out = new frag_testfn{frag::TestFunction::identity()}; });
}

frag_status frag_testfn_indicator(double lo, double hi, frag_testfn** out) {
  if (frag_status s = require(out != nullptr, "frag_testfn_indicator: null argument")) return s;
  *out = nullptr;
  return guard([&] { *out = new frag_testfn{frag::TestFunction::indicator(lo, hi)}; });
}

frag_status frag_testfn_polynomial(size_t n, const double* coeffs, frag_testfn** out) {
  if (frag_status s =
          require(out && (coeffs || n == 0), "frag_testfn_polynomial: null argument"))
    return s;
  *out = nullptr;
  return guard([&] {
    *out = new frag_testfn{frag::TestFunction::polynomial(std::vector<double>(coeffs, coeffs + n))};
  });
}

void frag_testfn_free(frag_testfn* f) { delete f; }

double frag_testfn_eval(const frag_testfn* f, double u) { return f ? f->f(u) : 0.0; }

/* ---- stopping lines ---- */

frag_status frag_stopping_line(const frag_measure* measure, double eta, uint64_t seed,
                               uint64_t budget, int retain_genealogy, frag_line** out) {
  if (frag_status s = require(measure && out, "frag_stopping_line: null argument")) return s;
  *out = nullptr;
  return guard([&] {
    frag::SimOptions opts;
    opts.budget = budget;
    opts.retain_genealogy = retain_genealogy != 0;
    auto handle = std::make_unique<frag_line>();
    handle->line = frag::stopping_line(*measure->m, eta, seed, opts);
    handle->m = measure->m;
    handle->opts = opts;
    *out = handle.release();
  });
}

frag_status frag_line_refine(const frag_line* line, double eta_prime, frag_line** out) {
  if (frag_status s = require(line && out, "frag_line_refine: null argument")) return s;
  *out = nullptr;
  return guard([&] {
    auto handle = std::make_unique<frag_line>();
    handle->line = frag::refine(line->line, eta_prime, *line->m, line->opts);
    handle->m = line->m;
    handle->opts = line->opts;
    *out = handle.release();
  });
}

void frag_line_free(frag_line* line) { delete line; }

size_t frag_line_size(const frag_line* line) { return line ? line->line.fragments.size() : 0; }

double frag_line_eta(const frag_line* line) { return line ? line->line.eta : 0.0; }

frag_status frag_line_fragment(const frag_line* line, size_t index, frag_fragment_info* out) {
  if (frag_status s = require(line && out, "frag_line_fragment: null argument")) return s;
  return guard([&] {
    if (index >= line->line.fragments.size()) {
      frag::raise(frag::Errc::invalid_argument, "fragment index out of range");
    }
    const frag::Fragment& f = line->line.fragments[index];
    out->mass = f.mass();
    out->log_mass = f.log_mass;
    out->freeze_time = f.freeze_time;
    out->depth = f.depth;
  });
}

double frag_line_mass_sum(const frag_line* line) { return line ? line->line.mass_sum() : 0.0; }

uint64_t frag_line_dust_events(const frag_line* line) {
  return line ? line->line.dust.events : 0;
}

double frag_line_dust_mass(const frag_line* line) { return line ? line->line.dust.mass : 0.0; }

frag_status frag_line_pairing(const frag_line* line, double p, const frag_testfn* f, double* out) {
  if (frag_status s = require(line && f && out, "frag_line_pairing: null argument")) return s;
  return guard([&] { *out = frag::empirical_pairing(line->line, p, f->f); });
}

frag_status frag_line_martingale_mass(const frag_line* line, double p, double* out) {
  if (frag_status s = require(line && out, "frag_line_martingale_mass: null argument")) return s;
  return guard([&] { *out = frag::martingale_mass(line->line, p); });
}

frag_status frag_line_self_similar_times(const frag_line* line, double alpha, double* times_out) {
  if (frag_status s =
          require(line && times_out, "frag_line_self_similar_times: null argument"))
    return s;
  return guard([&] {
    std::vector<double> times = frag::self_similar_freeze_times(line->line, alpha);
    for (size_t i = 0; i < times.size(); ++i) times_out[i] = times[i];
  });
}

/* ---- tagged fragment ---- */

frag_status frag_jump_law_create(const frag_measure* measure, double p, frag_jump_law** out) {
  if (frag_status s = require(measure && out, "frag_jump_law_create: null argument")) return s;
  *out = nullptr;
  return guard([&] { *out = new frag_jump_law(measure->m, p, measure->p_lower); });
}

void frag_jump_law_free(frag_jump_law* law) { delete law; }

double frag_jump_law_total_rate(const frag_jump_law* law) {
  return law ? law->law.total_rate() : 0.0;
}

double frag_jump_law_killing_rate(const frag_jump_law* law) {
  return law ? law->law.killing_rate() : 0.0;
}

int frag_jump_law_is_lattice(const frag_jump_law* law) {
  return law && law->law.is_lattice() ? 1 : 0;
}

frag_status frag_jump_law_levy_exponent(const frag_jump_law* law, double lambda, double* out) {
  if (frag_status s = require(law && out, "frag_jump_law_levy_exponent: null argument")) return s;
  return guard([&] { *out = law->law.levy_exponent_no_kill(lambda); });
}

frag_status frag_overshoot_sample(const frag_jump_law* law, double x, uint64_t seed, int* killed,
                                  double* passage, double* overshoot) {
  if (frag_status s = require(law && killed && passage && overshoot,
                              "frag_overshoot_sample: null argument"))
    return s;
  return guard([&] {
    frag::RngStream rng(frag::derive_stream(seed, frag::kTagOvershoot));
    frag::OvershootSample s = frag::overshoot_sample(law->law, x, rng);
    *killed = s.killed ? 1 : 0;
    *passage = s.passage;
    *overshoot = s.overshoot;
  });
}

frag_status frag_limit_pairing(const frag_measure* measure, const frag_testfn* f, double* out) {
  if (frag_status s = require(measure && f && out, "frag_limit_pairing: null argument")) return s;
  return guard([&] {
    const double p_star = frag::malthusian(*measure->m, measure->p_lower);
    frag::LimitMeasure rho(measure->m, p_star, measure->p_lower);
    *out = rho.pairing(f->f);
  });
}

frag_status frag_limit_cdf(const frag_measure* measure, double v, double* out) {
  if (frag_status s = require(measure && out, "frag_limit_cdf: null argument")) return s;
  return guard([&] {
    const double p_star = frag::malthusian(*measure->m, measure->p_lower);
    frag::LimitMeasure rho(measure->m, p_star, measure->p_lower);
    *out = rho.cdf(v);
  });
}

frag_status frag_renewal_ks(const frag_measure* measure, double x, uint64_t samples, uint64_t seed,
                            double* ks_out) {
  if (frag_status s = require(measure && ks_out, "frag_renewal_ks: null argument")) return s;
  return guard([&] {
    const double p_star = frag::malthusian(*measure->m, measure->p_lower);
    const double grid[1] = {x};
    std::vector<frag::RenewalPoint> pts =
        frag::renewal_limit_check(measure->m, p_star, grid, samples, seed, measure->p_lower);
    *ks_out = pts.at(0).ks;
  });
}

/* ---- many-to-one ---- */

frag_status frag_many_to_one(const frag_measure* measure, double eta, const frag_testfn* f,
                             uint64_t lines, uint64_t overshoots, uint64_t seed, uint64_t budget,
                             frag_m21_result* out) {
  if (frag_status s = require(measure && f && out, "frag_many_to_one: null argument")) return s;
  return guard([&] {
    frag::ExponentContext ctx = frag::ExponentContext::build(measure->m, measure->p_lower);
    frag::ManyToOneOptions opts;
    opts.lines = lines;
    opts.overshoots = overshoots;
    opts.budget = budget;
    const frag::TestFunction fns[1] = {f->f};
    std::vector<frag::ManyToOneResult> res = frag::many_to_one_check(ctx, eta, fns, seed, opts);
    out->lhs = res.at(0).lhs;
    out->lhs_se = res.at(0).lhs_se;
    out->rhs = res.at(0).rhs;
    out->rhs_se = res.at(0).rhs_se;
    out->z = res.at(0).z;
  });
}

/* ---- configuration and runner ---- */

frag_status frag_config_parse(const char* text, size_t len, frag_config** out) {
  if (frag_status s = require(text && out, "frag_config_parse: null argument")) return s;
  *out = nullptr;
  return guard([&] {
    std::string_view view = len > 0 ? std::string_view(text, len) : std::string_view(text);
    auto handle = std::make_unique<frag_config>();
    handle->doc = frag::parse_config_document(view);
    handle->cfg = frag::build_run_config(handle->doc);
    *out = handle.release();
  });
}

void frag_config_free(frag_config* config) { delete config; }

frag_status frag_config_set(frag_config* config, const char* key, const char* value) {
  if (frag_status s = require(config && key && value, "frag_config_set: null argument")) return s;
  return guard([&] {
    frag::ConfigValue v = frag::parse_config_value(value);
    frag::ConfigDoc doc = config->doc;
    doc[key] = v;
    // Rebuild first so a bad override leaves the configuration untouched.
    frag::RunConfig cfg = frag::build_run_config(doc);
    config->doc = std::move(doc);
    config->cfg = std::move(cfg);
  });
}

frag_status frag_config_echo(const frag_config* config, char** json_out) {
  if (frag_status s = require(config && json_out, "frag_config_echo: null argument")) return s;
  *json_out = nullptr;
  return guard([&] {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (const auto& [key, value] : config->cfg.echo) {
      if (!first) os << ",";
      first = false;
      os << "\"" << key << "\":\"";
      for (char c : value) {
        if (c == '"' || c == '\\') os << '\\';
        os << c;
      }
      os << "\"";
    }
    os << "}";
    const std::string text = os.str();
    char* buffer = static_cast<char*>(::operator new(text.size() + 1));
    std::memcpy(buffer, text.c_str(), text.size() + 1);
    *json_out = buffer;
  });
}

void frag_string_free(char* s) { ::operator delete(s); }

frag_status frag_run(const frag_config* config, const char* subcommand, int* exit_code_out,
                     char** summary_json_out) {
  if (frag_status s = require(config && subcommand && exit_code_out, "frag_run: null argument"))
    return s;
  *exit_code_out = 0;
  if (summary_json_out) *summary_json_out = nullptr;
  return guard([&] {
    frag::RunOutcome outcome = frag::run_dispatch(subcommand, config->cfg);
    *exit_code_out = outcome.exit_code;
    if (summary_json_out) {
      char* buffer = static_cast<char*>(::operator new(outcome.summary.size() + 1));
      std::memcpy(buffer, outcome.summary.c_str(), outcome.summary.size() + 1);
      *summary_json_out = buffer;
    }
  });
}

const char* frag_subcommands(void) {
  static const std::string joined = [] {
    std::string acc;
    for (const std::string& name : frag::subcommand_names()) {
      if (!acc.empty()) acc += "\n";
      acc += name;
    }
    return acc;
  }();
  return joined.c_str();
}

}  // extern "C"

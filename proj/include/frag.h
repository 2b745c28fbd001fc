/* C interface to the fragmentation toolkit. All functions return FRAG_OK or
 * an error status; frag_last_error() describes the most recent failure on the
 * calling thread. Handles are opaque and freed with their matching _free
 * function. */
#ifndef FRAG_H
#define FRAG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FRAG_API __declspec(dllexport)
#else
#define FRAG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum frag_status {
  FRAG_OK = 0,
  FRAG_E_INVALID = 1,
  FRAG_E_PARSE = 2,
  FRAG_E_VALIDATION = 3,
  FRAG_E_SUM_EXCEEDS_ONE = 4,
  FRAG_E_NON_INTEGRABLE = 5,
  FRAG_E_BELOW_LOWER_INDEX = 6,
  FRAG_E_NO_MALTHUSIAN_ROOT = 7,
  FRAG_E_NO_BIGGINS_ROOT = 8,
  FRAG_E_BUDGET_EXCEEDED = 9,
  FRAG_E_KILLED_BEFORE_PASSAGE = 10,
  FRAG_E_LATTICE_DETECTED = 11,
  FRAG_E_GENEALOGY_MISSING = 12,
  FRAG_E_CHECK_FAILED = 13,
  FRAG_E_IO = 14,
  FRAG_E_INTERNAL = 15
} frag_status;

FRAG_API const char* frag_status_name(frag_status status);
FRAG_API const char* frag_version(void);

/* Thread-local description of the last failure; empty string if none.
 * Line/column are nonzero only after a parse error. */
FRAG_API const char* frag_last_error(void);
FRAG_API int frag_last_error_line(void);
FRAG_API int frag_last_error_column(void);

typedef struct frag_measure frag_measure;
typedef struct frag_testfn frag_testfn;
typedef struct frag_line frag_line;
typedef struct frag_jump_law frag_jump_law;
typedef struct frag_config frag_config;

/* ---- dislocation measures ---- */

/* Atoms are passed flattened: atom k has term_counts[k] fragment sizes,
 * stored consecutively in terms. */
FRAG_API frag_status frag_measure_discrete(size_t n_atoms, const double* rates,
                                           const size_t* term_counts, const double* terms,
                                           frag_measure** out);

/* Supported density names: "uniform". epsilon in (0, 1/2). */
FRAG_API frag_status frag_measure_binary_density(const char* density, double epsilon,
                                                 frag_measure** out);

/* Override the lower index used for domain checks; must lie in (-1, 0]. */
FRAG_API frag_status frag_measure_set_p_lower(frag_measure* measure, double p_lower);

FRAG_API void frag_measure_free(frag_measure* measure);
FRAG_API double frag_measure_total_rate(const frag_measure* measure);
FRAG_API int frag_measure_is_discrete(const frag_measure* measure);
FRAG_API int frag_measure_is_conservative(const frag_measure* measure);

/* Draw one partition. terms_out receives up to capacity sizes (sorted
 * non-increasing); *n_out is the true count, *dust_out the lost mass. */
FRAG_API frag_status frag_measure_sample(const frag_measure* measure, uint64_t seed,
                                         size_t capacity, double* terms_out, size_t* n_out,
                                         double* dust_out);

/* ---- Laplace exponent ---- */

FRAG_API frag_status frag_phi(const frag_measure* measure, double p, double* out);
FRAG_API frag_status frag_phi_prime(const frag_measure* measure, double p, double* out);
FRAG_API frag_status frag_malthusian(const frag_measure* measure, double* out);
FRAG_API frag_status frag_biggins_threshold(const frag_measure* measure, double* out);
FRAG_API frag_status frag_tilted_exponent(const frag_measure* measure, double p, double lambda,
                                          double* out);

typedef struct frag_assumptions {
  int conservative;
  int a1;
  double phi_prime_at_zero;
  int a2;
  double p_star;
  int a3;
  double a3_p0;
  double a3_value;
  double phi_at_zero;
} frag_assumptions;

FRAG_API frag_status frag_assumption_report(const frag_measure* measure, frag_assumptions* out);

/* ---- test functions ---- */

FRAG_API frag_status frag_testfn_one(frag_testfn** out);
FRAG_API frag_status frag_testfn_identity(frag_testfn** out);
FRAG_API frag_status frag_testfn_indicator(double lo, double hi, frag_testfn** out);
FRAG_API frag_status frag_testfn_polynomial(size_t n, const double* coeffs, frag_testfn** out);
FRAG_API void frag_testfn_free(frag_testfn* f);
FRAG_API double frag_testfn_eval(const frag_testfn* f, double u);

/* ---- stopping lines ---- */

typedef struct frag_fragment_info {
  double mass;
  double log_mass;
  double freeze_time;
  uint32_t depth;
} frag_fragment_info;

FRAG_API frag_status frag_stopping_line(const frag_measure* measure, double eta, uint64_t seed,
                                        uint64_t budget, int retain_genealogy, frag_line** out);
FRAG_API frag_status frag_line_refine(const frag_line* line, double eta_prime, frag_line** out);
FRAG_API void frag_line_free(frag_line* line);

FRAG_API size_t frag_line_size(const frag_line* line);
FRAG_API double frag_line_eta(const frag_line* line);
FRAG_API frag_status frag_line_fragment(const frag_line* line, size_t index,
                                        frag_fragment_info* out);
FRAG_API double frag_line_mass_sum(const frag_line* line);
FRAG_API uint64_t frag_line_dust_events(const frag_line* line);
FRAG_API double frag_line_dust_mass(const frag_line* line);

/* Empirical pairing sum_j X_j^(1+p) f(X_j / eta). */
FRAG_API frag_status frag_line_pairing(const frag_line* line, double p, const frag_testfn* f,
                                       double* out);
/* sum_j X_j^(1+p). */
FRAG_API frag_status frag_line_martingale_mass(const frag_line* line, double p, double* out);
/* Freeze times of the index-alpha self-similar time change; times_out must
 * hold frag_line_size entries. Fails with FRAG_E_GENEALOGY_MISSING unless the
 * line retained its genealogy. */
FRAG_API frag_status frag_line_self_similar_times(const frag_line* line, double alpha,
                                                  double* times_out);

/* ---- tagged fragment ---- */

FRAG_API frag_status frag_jump_law_create(const frag_measure* measure, double p,
                                          frag_jump_law** out);
FRAG_API void frag_jump_law_free(frag_jump_law* law);
FRAG_API double frag_jump_law_total_rate(const frag_jump_law* law);
FRAG_API double frag_jump_law_killing_rate(const frag_jump_law* law);
FRAG_API int frag_jump_law_is_lattice(const frag_jump_law* law);
FRAG_API frag_status frag_jump_law_levy_exponent(const frag_jump_law* law, double lambda,
                                                 double* out);

/* One first-passage overshoot sample over level x. *killed is 1 when the
 * chain died first; passage/overshoot are +inf in that case. */
FRAG_API frag_status frag_overshoot_sample(const frag_jump_law* law, double x, uint64_t seed,
                                           int* killed, double* passage, double* overshoot);

/* <rho, f> and rho((0, v]) for the limit measure at the measure's Malthusian
 * parameter. */
FRAG_API frag_status frag_limit_pairing(const frag_measure* measure, const frag_testfn* f,
                                        double* out);
FRAG_API frag_status frag_limit_cdf(const frag_measure* measure, double v, double* out);

/* Kolmogorov-Smirnov distance of e^(-overshoot(x)) from the limit measure;
 * FRAG_E_LATTICE_DETECTED for lattice jump laws. */
FRAG_API frag_status frag_renewal_ks(const frag_measure* measure, double x, uint64_t samples,
                                     uint64_t seed, double* ks_out);

/* ---- many-to-one ---- */

typedef struct frag_m21_result {
  double lhs;
  double lhs_se;
  double rhs;
  double rhs_se;
  double z;
} frag_m21_result;

FRAG_API frag_status frag_many_to_one(const frag_measure* measure, double eta,
                                      const frag_testfn* f, uint64_t lines, uint64_t overshoots,
                                      uint64_t seed, uint64_t budget, frag_m21_result* out);

/* ---- configuration and runner ---- */

/* Parse and validate configuration text (len 0 means strlen). */
FRAG_API frag_status frag_config_parse(const char* text, size_t len, frag_config** out);
FRAG_API void frag_config_free(frag_config* config);

/* Override one key with value text (same syntax as the file); revalidates. */
FRAG_API frag_status frag_config_set(frag_config* config, const char* key, const char* value);

/* Materialized configuration echo as JSON; free with frag_string_free. */
FRAG_API frag_status frag_config_echo(const frag_config* config, char** json_out);
FRAG_API void frag_string_free(char* s);

/* Run a subcommand. *exit_code_out is 0 on success, 1 when a statistical
 * check failed; module errors surface as the returned status. When
 * summary_json_out is non-null it receives the summary JSON (free with
 * frag_string_free). */
FRAG_API frag_status frag_run(const frag_config* config, const char* subcommand,
                              int* exit_code_out, char** summary_json_out);

/* Newline-separated list of subcommand names. */
FRAG_API const char* frag_subcommands(void);

#ifdef __cplusplus
}
#endif

#endif /* FRAG_H */

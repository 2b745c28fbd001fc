#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "frag.h"
#include "json.hpp"

using nlohmann::json;

namespace {

using MeasurePtr = std::unique_ptr<frag_measure, decltype(&frag_measure_free)>;
using TestFnPtr = std::unique_ptr<frag_testfn, decltype(&frag_testfn_free)>;
using LinePtr = std::unique_ptr<frag_line, decltype(&frag_line_free)>;
using LawPtr = std::unique_ptr<frag_jump_law, decltype(&frag_jump_law_free)>;
using ConfigPtr = std::unique_ptr<frag_config, decltype(&frag_config_free)>;

MeasurePtr discrete(std::vector<double> rates, std::vector<std::vector<double>> atoms) {
  std::vector<size_t> counts;
  std::vector<double> flat;
  for (const auto& terms : atoms) {
    counts.push_back(terms.size());
    flat.insert(flat.end(), terms.begin(), terms.end());
  }
  frag_measure* m = nullptr;
  REQUIRE(frag_measure_discrete(rates.size(), rates.data(), counts.data(), flat.data(), &m) ==
          FRAG_OK);
  REQUIRE(m != nullptr);
  return MeasurePtr(m, &frag_measure_free);
}

TestFnPtr fn_one() {
  frag_testfn* f = nullptr;
  REQUIRE(frag_testfn_one(&f) == FRAG_OK);
  return TestFnPtr(f, &frag_testfn_free);
}

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("status names and version") {
    CHECK(std::strcmp(frag_status_name(FRAG_OK), "Ok") == 0);
    CHECK(std::strcmp(frag_status_name(FRAG_E_PARSE), "ParseError") == 0);
    CHECK(std::strcmp(frag_status_name(FRAG_E_LATTICE_DETECTED), "LatticeDetected") == 0);
    CHECK(std::strcmp(frag_status_name(FRAG_E_BUDGET_EXCEEDED), "BudgetExceeded") == 0);
    CHECK(frag_version() != nullptr);
  }

  TEST_CASE("measure construction, predicates, sampling") {
    MeasurePtr hq = discrete({1.0}, {{0.5, 0.25}});
    CHECK(frag_measure_total_rate(hq.get()) == 1.0);
    CHECK(frag_measure_is_discrete(hq.get()) == 1);
    CHECK(frag_measure_is_conservative(hq.get()) == 0);

    MeasurePtr cons = discrete({1.0}, {{0.7, 0.3}});
    CHECK(frag_measure_is_conservative(cons.get()) == 1);

    double terms[8] = {0};
    size_t n = 0;
    double dust = -1.0;
    REQUIRE(frag_measure_sample(hq.get(), 42, 8, terms, &n, &dust) == FRAG_OK);
    REQUIRE(n == 2);
    CHECK(terms[0] == 0.5);
    CHECK(terms[1] == 0.25);
    CHECK(close(dust, 0.25, 1e-15));

    // Capacity smaller than the partition still reports the true count.
    double one_slot[1] = {0};
    REQUIRE(frag_measure_sample(hq.get(), 42, 1, one_slot, &n, nullptr) == FRAG_OK);
    CHECK(n == 2);
    CHECK(one_slot[0] == 0.5);
  }

  TEST_CASE("measure construction errors set the thread-local message") {
    frag_measure* m = reinterpret_cast<frag_measure*>(0x1);
    const double rates[] = {1.0};
    const size_t counts[] = {2};
    const double bad_terms[] = {0.7, 0.4};
    CHECK(frag_measure_discrete(1, rates, counts, bad_terms, &m) == FRAG_E_SUM_EXCEEDS_ONE);
    CHECK(m == nullptr);
    CHECK(std::strlen(frag_last_error()) > 0);

    CHECK(frag_measure_discrete(1, rates, counts, nullptr, &m) == FRAG_E_INVALID);
    CHECK(frag_measure_discrete(1, rates, counts, bad_terms, nullptr) == FRAG_E_INVALID);

    frag_measure* d = nullptr;
    CHECK(frag_measure_binary_density("cascade", 0.1, &d) == FRAG_E_VALIDATION);
    CHECK(d == nullptr);
    CHECK(frag_measure_binary_density("uniform", 0.6, &d) == FRAG_E_INVALID);

    REQUIRE(frag_measure_binary_density("uniform", 0.1, &d) == FRAG_OK);
    MeasurePtr density(d, &frag_measure_free);
    CHECK(frag_measure_is_discrete(d) == 0);
    CHECK(close(frag_measure_total_rate(d), 0.4, 1e-8));

    MeasurePtr hq = discrete({1.0}, {{0.5, 0.25}});
    CHECK(frag_measure_set_p_lower(hq.get(), -0.4) == FRAG_OK);
    CHECK(frag_measure_set_p_lower(hq.get(), -1.5) == FRAG_E_INVALID);
    CHECK(frag_measure_set_p_lower(hq.get(), 0.5) == FRAG_E_INVALID);
    CHECK(frag_measure_set_p_lower(nullptr, -0.4) == FRAG_E_INVALID);
  }

  TEST_CASE("exponent round trips") {
    MeasurePtr m73 = discrete({1.0}, {{0.7, 0.3}});
    double v = 0.0;
    REQUIRE(frag_phi(m73.get(), 1.0, &v) == FRAG_OK);
    CHECK(close(v, 0.42, 1e-12));
    REQUIRE(frag_phi_prime(m73.get(), 0.0, &v) == FRAG_OK);
    CHECK(close(v, 0.7 * std::log(1.0 / 0.7) + 0.3 * std::log(1.0 / 0.3), 1e-12));
    REQUIRE(frag_malthusian(m73.get(), &v) == FRAG_OK);
    CHECK(v == 0.0);
    REQUIRE(frag_biggins_threshold(m73.get(), &v) == FRAG_OK);
    CHECK(v > 1.3);
    CHECK(v < 1.5);

    MeasurePtr hq = discrete({1.0}, {{0.5, 0.25}});
    double p_star = 0.0;
    REQUIRE(frag_malthusian(hq.get(), &p_star) == FRAG_OK);
    CHECK(close(p_star, std::log2((1.0 + std::sqrt(5.0)) / 2.0) - 1.0, 1e-10));

    double phi_a = 0.0, phi_b = 0.0, tilted = 0.0;
    REQUIRE(frag_tilted_exponent(hq.get(), p_star, 0.75, &tilted) == FRAG_OK);
    REQUIRE(frag_phi(hq.get(), p_star + 0.75, &phi_a) == FRAG_OK);
    REQUIRE(frag_phi(hq.get(), p_star, &phi_b) == FRAG_OK);
    CHECK(close(tilted, phi_a - phi_b, 1e-12));

    CHECK(frag_phi(hq.get(), -1.0, &v) == FRAG_E_BELOW_LOWER_INDEX);
    CHECK(frag_phi(nullptr, 0.0, &v) == FRAG_E_INVALID);

    frag_assumptions rep;
    REQUIRE(frag_assumption_report(hq.get(), &rep) == FRAG_OK);
    CHECK(rep.conservative == 0);
    CHECK(rep.a1 == 1);
    CHECK(rep.a2 == 1);
    CHECK(rep.a3 == 1);
    CHECK(rep.a3_p0 == 2.0);
    CHECK(close(rep.p_star, p_star, 1e-12));
    CHECK(close(rep.phi_at_zero, 0.25, 1e-12));
    CHECK(close(rep.phi_prime_at_zero, std::log(2.0), 1e-12));
  }

  TEST_CASE("test functions evaluate on the closed unit interval") {
    TestFnPtr one = fn_one();
    CHECK(frag_testfn_eval(one.get(), 0.5) == 1.0);
    CHECK(frag_testfn_eval(one.get(), 1.5) == 0.0);

    frag_testfn* raw = nullptr;
    REQUIRE(frag_testfn_identity(&raw) == FRAG_OK);
    TestFnPtr id(raw, &frag_testfn_free);
    CHECK(frag_testfn_eval(id.get(), 0.3) == 0.3);

    REQUIRE(frag_testfn_indicator(0.25, 0.75, &raw) == FRAG_OK);
    TestFnPtr ind(raw, &frag_testfn_free);
    CHECK(frag_testfn_eval(ind.get(), 0.5) == 1.0);
    CHECK(frag_testfn_eval(ind.get(), 0.75) == 0.0);  // half-open on the right

    const double coeffs[] = {1.0, 2.0};
    REQUIRE(frag_testfn_polynomial(2, coeffs, &raw) == FRAG_OK);
    TestFnPtr poly(raw, &frag_testfn_free);
    CHECK(frag_testfn_eval(poly.get(), 0.5) == 2.0);

    CHECK(frag_testfn_indicator(0.8, 0.2, &raw) == FRAG_E_INVALID);
    CHECK(frag_testfn_polynomial(0, nullptr, &raw) == FRAG_E_INVALID);
  }

  TEST_CASE("stopping lines: simulate, inspect, refine") {
    MeasurePtr dyadic = discrete({1.0}, {{0.5, 0.5}});
    frag_line* raw = nullptr;
    REQUIRE(frag_stopping_line(dyadic.get(), 0.3, 7, 1u << 20, 1, &raw) == FRAG_OK);
    LinePtr line(raw, &frag_line_free);

    CHECK(frag_line_size(line.get()) == 4);
    CHECK(frag_line_eta(line.get()) == 0.3);
    CHECK(close(frag_line_mass_sum(line.get()), 1.0, 1e-12));
    CHECK(frag_line_dust_events(line.get()) == 0);
    CHECK(frag_line_dust_mass(line.get()) == 0.0);

    frag_fragment_info info;
    REQUIRE(frag_line_fragment(line.get(), 0, &info) == FRAG_OK);
    CHECK(close(info.mass, 0.25, 1e-15));
    CHECK(info.depth == 2);
    CHECK(info.freeze_time > 0.0);
    CHECK(close(info.log_mass, std::log(0.25), 1e-12));
    CHECK(frag_line_fragment(line.get(), 99, &info) == FRAG_E_INVALID);

    TestFnPtr one = fn_one();
    double v = 0.0;
    REQUIRE(frag_line_pairing(line.get(), 0.0, one.get(), &v) == FRAG_OK);
    CHECK(close(v, 1.0, 1e-12));
    REQUIRE(frag_line_martingale_mass(line.get(), 0.0, &v) == FRAG_OK);
    CHECK(close(v, 1.0, 1e-12));
    CHECK(frag_line_pairing(line.get(), 0.0, nullptr, &v) == FRAG_E_INVALID);

    double times[4] = {0};
    REQUIRE(frag_line_self_similar_times(line.get(), 1.0, times) == FRAG_OK);
    for (size_t i = 0; i < 4; ++i) {
      REQUIRE(frag_line_fragment(line.get(), i, &info) == FRAG_OK);
      CHECK(times[i] > 0.0);
      CHECK(times[i] <= info.freeze_time + 1e-15);
    }

    frag_line* refined_raw = nullptr;
    REQUIRE(frag_line_refine(line.get(), 0.1, &refined_raw) == FRAG_OK);
    LinePtr refined(refined_raw, &frag_line_free);
    CHECK(frag_line_size(refined.get()) == 16);
    REQUIRE(frag_line_fragment(refined.get(), 5, &info) == FRAG_OK);
    CHECK(close(info.mass, 0.0625, 1e-15));

    frag_line* bad = nullptr;
    CHECK(frag_line_refine(line.get(), 0.5, &bad) == FRAG_E_INVALID);
    CHECK(bad == nullptr);
  }

  TEST_CASE("eta of one freezes the unit block at time zero") {
    MeasurePtr dyadic = discrete({1.0}, {{0.5, 0.5}});
    frag_line* raw = nullptr;
    REQUIRE(frag_stopping_line(dyadic.get(), 1.0, 7, 1u << 20, 0, &raw) == FRAG_OK);
    LinePtr line(raw, &frag_line_free);
    CHECK(frag_line_size(line.get()) == 1);
    frag_fragment_info info;
    REQUIRE(frag_line_fragment(line.get(), 0, &info) == FRAG_OK);
    CHECK(info.mass == 1.0);
    CHECK(info.freeze_time == 0.0);
    CHECK(info.depth == 0);

    // The unit block has no ancestral segments, so the time change succeeds
    // without a genealogy and returns the frozen-at-zero time unchanged.
    double t = -1.0;
    CHECK(frag_line_self_similar_times(line.get(), 1.0, &t) == FRAG_OK);
    CHECK(t == 0.0);

    // A real line without a retained genealogy is refused.
    frag_line* deep_raw = nullptr;
    REQUIRE(frag_stopping_line(dyadic.get(), 0.5, 7, 1u << 20, 0, &deep_raw) == FRAG_OK);
    LinePtr deep(deep_raw, &frag_line_free);
    std::vector<double> times(frag_line_size(deep.get()), 0.0);
    CHECK(frag_line_self_similar_times(deep.get(), 1.0, times.data()) ==
          FRAG_E_GENEALOGY_MISSING);
  }

  TEST_CASE("budget exhaustion is reported") {
    MeasurePtr dyadic = discrete({1.0}, {{0.5, 0.5}});
    frag_line* raw = nullptr;
    CHECK(frag_stopping_line(dyadic.get(), 1e-6, 7, 2, 0, &raw) == FRAG_E_BUDGET_EXCEEDED);
    CHECK(raw == nullptr);
  }

  TEST_CASE("jump law and overshoot sampling") {
    MeasurePtr hq = discrete({1.0}, {{0.5, 0.25}});
    double p_star = 0.0;
    REQUIRE(frag_malthusian(hq.get(), &p_star) == FRAG_OK);

    frag_jump_law* raw = nullptr;
    REQUIRE(frag_jump_law_create(hq.get(), p_star, &raw) == FRAG_OK);
    LawPtr law(raw, &frag_jump_law_free);
    CHECK(close(frag_jump_law_total_rate(law.get()), 1.0, 1e-10));
    CHECK(std::fabs(frag_jump_law_killing_rate(law.get())) < 1e-10);
    CHECK(frag_jump_law_is_lattice(law.get()) == 1);

    // The jump-side exponent must match the difference of tilted exponents.
    double from_jumps = 0.0, phi_hi = 0.0, phi_lo = 0.0;
    REQUIRE(frag_jump_law_levy_exponent(law.get(), 1.0, &from_jumps) == FRAG_OK);
    REQUIRE(frag_phi(hq.get(), p_star + 1.0, &phi_hi) == FRAG_OK);
    REQUIRE(frag_phi(hq.get(), p_star, &phi_lo) == FRAG_OK);
    CHECK(close(from_jumps, phi_hi - phi_lo, 1e-9));

    MeasurePtr m73 = discrete({1.0}, {{0.7, 0.3}});
    frag_jump_law* raw73 = nullptr;
    REQUIRE(frag_jump_law_create(m73.get(), 0.0, &raw73) == FRAG_OK);
    LawPtr law73(raw73, &frag_jump_law_free);
    CHECK(frag_jump_law_is_lattice(law73.get()) == 0);

    int killed = -1;
    double passage = 0.0, overshoot = 0.0;
    REQUIRE(frag_overshoot_sample(law73.get(), 2.0, 11, &killed, &passage, &overshoot) == FRAG_OK);
    CHECK(killed == 0);
    CHECK(passage >= 2.0);
    CHECK(overshoot >= 0.0);
    CHECK(close(passage - 2.0, overshoot, 1e-12));

    // Dissipative law at tilt zero can die before crossing; the sample then
    // reports infinities.
    frag_jump_law* raw_kill = nullptr;
    REQUIRE(frag_jump_law_create(hq.get(), 0.0, &raw_kill) == FRAG_OK);
    LawPtr killing(raw_kill, &frag_jump_law_free);
    CHECK(close(frag_jump_law_killing_rate(killing.get()), 0.25, 1e-12));
    int died = 0;
    size_t deaths = 0;
    for (uint64_t seed = 0; seed < 64; ++seed) {
      REQUIRE(frag_overshoot_sample(killing.get(), 5.0, seed, &died, &passage, &overshoot) ==
              FRAG_OK);
      if (died) {
        ++deaths;
        CHECK(std::isinf(passage));
        CHECK(std::isinf(overshoot));
      } else {
        CHECK(passage >= 5.0);
      }
    }
    CHECK(deaths > 10);  // killing probability at x=5 is well above 1/4
    CHECK(deaths < 64);

    CHECK(frag_jump_law_create(hq.get(), -1.0, &raw_kill) == FRAG_E_BELOW_LOWER_INDEX);
  }

  TEST_CASE("limit measure pairings and the renewal distance") {
    MeasurePtr m73 = discrete({1.0}, {{0.7, 0.3}});
    TestFnPtr one = fn_one();
    double v = 0.0;
    REQUIRE(frag_limit_pairing(m73.get(), one.get(), &v) == FRAG_OK);
    CHECK(close(v, 1.0, 1e-10));

    REQUIRE(frag_limit_cdf(m73.get(), 1.0, &v) == FRAG_OK);
    CHECK(close(v, 1.0, 1e-10));
    REQUIRE(frag_limit_cdf(m73.get(), 0.2, &v) == FRAG_OK);
    CHECK(v == 0.0);  // support starts at the smallest fragment size
    const double phi_prime0 = 0.7 * std::log(1.0 / 0.7) + 0.3 * std::log(1.0 / 0.3);
    REQUIRE(frag_limit_cdf(m73.get(), 0.7, &v) == FRAG_OK);
    CHECK(close(v, 0.3 * std::log(7.0 / 3.0) / phi_prime0, 1e-10));

    double ks = -1.0;
    REQUIRE(frag_renewal_ks(m73.get(), 6.0, 4000, 3, &ks) == FRAG_OK);
    CHECK(ks > 0.0);
    CHECK(ks < 0.2);

    MeasurePtr dyadic = discrete({1.0}, {{0.5, 0.5}});
    CHECK(frag_renewal_ks(dyadic.get(), 6.0, 4000, 3, &ks) == FRAG_E_LATTICE_DETECTED);
  }

  TEST_CASE("many-to-one through the flat interface") {
    MeasurePtr m73 = discrete({1.0}, {{0.7, 0.3}});
    TestFnPtr one = fn_one();
    frag_m21_result res;
    REQUIRE(frag_many_to_one(m73.get(), 0.1, one.get(), 16, 16, 5, 1u << 20, &res) == FRAG_OK);
    CHECK(close(res.lhs, 1.0, 1e-12));
    CHECK(res.rhs == 1.0);
    CHECK(res.z == 0.0);

    CHECK(frag_many_to_one(m73.get(), 0.0, one.get(), 16, 16, 5, 1u << 20, &res) ==
          FRAG_E_INVALID);
  }

  TEST_CASE("config parse, override, echo, run") {
    const char* text =
        "measure.type = discrete\n"
        "measure.atoms = [[1.0, [0.5, 0.5]]]\n"
        "line.eta = 0.3\n";
    frag_config* raw = nullptr;
    REQUIRE(frag_config_parse(text, 0, &raw) == FRAG_OK);
    ConfigPtr cfg(raw, &frag_config_free);

    char* echo_json = nullptr;
    REQUIRE(frag_config_echo(cfg.get(), &echo_json) == FRAG_OK);
    json echo = json::parse(echo_json);
    frag_string_free(echo_json);
    CHECK(echo["measure.type"] == "discrete");
    CHECK(echo["line.eta"].get<std::string>() == "0.29999999999999999");
    CHECK(echo["run.seed"].get<std::string>() == "1");

    REQUIRE(frag_config_set(cfg.get(), "line.eta", "0.25") == FRAG_OK);
    REQUIRE(frag_config_echo(cfg.get(), &echo_json) == FRAG_OK);
    echo = json::parse(echo_json);
    frag_string_free(echo_json);
    CHECK(echo["line.eta"].get<std::string>() == "0.25");

    // A rejected override must leave the previous state intact.
    CHECK(frag_config_set(cfg.get(), "line.eta", "-1.0") == FRAG_E_VALIDATION);
    CHECK(frag_config_set(cfg.get(), "line.eta", "[") == FRAG_E_PARSE);
    REQUIRE(frag_config_echo(cfg.get(), &echo_json) == FRAG_OK);
    echo = json::parse(echo_json);
    frag_string_free(echo_json);
    CHECK(echo["line.eta"].get<std::string>() == "0.25");

    const std::string out_base = (std::filesystem::temp_directory_path() /
                                  ("frag-capi-" + std::to_string(::getpid())))
                                     .string();
    REQUIRE(frag_config_set(cfg.get(), "run.out", ("\"" + out_base + "\"").c_str()) == FRAG_OK);
    int exit_code = -1;
    char* summary = nullptr;
    REQUIRE(frag_run(cfg.get(), "stopping-line", &exit_code, &summary) == FRAG_OK);
    CHECK(exit_code == 0);
    REQUIRE(summary != nullptr);
    const json parsed = json::parse(summary);
    frag_string_free(summary);
    CHECK(parsed["subcommand"] == "stopping-line");
    CHECK(parsed["fragments_total"] == 8);  // eta 0.25 keeps masses of 1/8
    CHECK(std::filesystem::exists(out_base + ".csv"));
    std::filesystem::remove(out_base + ".csv");
    std::filesystem::remove(out_base + ".json");

    CHECK(frag_run(cfg.get(), "frobnicate", &exit_code, nullptr) == FRAG_E_INVALID);
  }

  TEST_CASE("parse failures carry location and message") {
    frag_config* raw = reinterpret_cast<frag_config*>(0x1);
    CHECK(frag_config_parse("measure.type discrete\n", 0, &raw) == FRAG_E_PARSE);
    CHECK(raw == nullptr);
    CHECK(frag_last_error_line() == 1);
    CHECK(frag_last_error_column() > 0);
    CHECK(std::strlen(frag_last_error()) > 0);

    CHECK(frag_config_parse("measure.type = discrete\nmeasure.atoms = [[1.0, [0.5, 0.5]]]\n"
                            "measure.bogus = 1\n",
                            0, &raw) == FRAG_E_VALIDATION);
    CHECK(frag_config_parse(nullptr, 0, &raw) == FRAG_E_INVALID);
  }

  TEST_CASE("subcommand listing is newline separated") {
    const std::string names = frag_subcommands();
    CHECK(names.find("phi\n") != std::string::npos);
    CHECK(names.find("stopping-line") != std::string::npos);
    CHECK(names.find("self-similar-times") != std::string::npos);
    CHECK(names.find(' ') == std::string::npos);
  }
}

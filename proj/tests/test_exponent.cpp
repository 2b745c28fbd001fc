#include <cmath>
#include <vector>

#include "doctest.h"
#include "frag/dislocation.hpp"
#include "frag/exponent.hpp"
#include "testutil.hpp"

using frag::Errc;

namespace {

// Closed forms for the two-atom measures used throughout.
const double kLog2 = std::log(2.0);

double phi_prime_73() { return 0.7 * std::log(1.0 / 0.7) + 0.3 * std::log(1.0 / 0.3); }

// Malthusian parameter of (1/2, 1/4): with u = 2^{-(1+p)}, phi(p) = 1 - u -
// u^2, whose root is the golden-ratio point u = (sqrt(5) - 1)/2, i.e.
// p = log2((1 + sqrt(5))/2) - 1.
double p_star_hq() { return std::log2((1.0 + std::sqrt(5.0)) / 2.0) - 1.0; }

}  // namespace

TEST_SUITE("exponent") {
  TEST_CASE("closed-form values on catalog measures") {
    auto half = frag::catalog::binary(0.5);
    CHECK(testutil::close(frag::phi(*half, 1.0), 0.5, 1e-12));
    CHECK(testutil::close(frag::phi_prime(*half, 0.0), kLog2, 1e-12));

    auto m73 = frag::catalog::from_atoms({{1.0, {0.7, 0.3}}});
    CHECK(testutil::close(frag::phi_prime(*m73, 0.0), phi_prime_73(), 1e-12));
    CHECK(testutil::close(frag::phi(*m73, 0.0), 0.0, 1e-14));
    CHECK(testutil::close(frag::phi(*m73, 1.0), 0.42, 1e-12));

    auto hq = frag::catalog::half_quarter();
    CHECK(testutil::close(frag::phi(*hq, 0.0), 0.25, 1e-12));
    // phi'(0) = (1/2)log 2 + (1/4)log 4 = log 2.
    CHECK(testutil::close(frag::phi_prime(*hq, 0.0), kLog2, 1e-12));
  }

  TEST_CASE("density measures integrate the same functional") {
    auto m = frag::truncate(frag::catalog::uniform_binary(), 0.1);
    // phi(1) = int_{1/2}^{9/10} (1 - a^2 - (1-a)^2) da = int 2a(1-a) da.
    const double expected = 2.0 * (0.9 * 0.9 / 2.0 - 0.9 * 0.9 * 0.9 / 3.0) -
                            2.0 * (0.5 * 0.5 / 2.0 - 0.5 * 0.5 * 0.5 / 3.0);
    CHECK(testutil::close(frag::phi(*m, 1.0), expected, 1e-9));
  }

  TEST_CASE("finite differences agree with phi_prime") {
    for (const auto& m : {frag::catalog::binary(0.5), frag::catalog::half_quarter(),
                          frag::catalog::from_atoms({{1.0, {0.7, 0.3}}})}) {
      for (double p : {-0.5, 0.0, 0.7, 1.5}) {
        const double h = 1e-6;
        const double fd = (frag::phi(*m, p + h) - frag::phi(*m, p - h)) / (2.0 * h);
        CHECK(testutil::close(fd, frag::phi_prime(*m, p), 1e-7));
      }
    }
  }

  TEST_CASE("phi is increasing and concave") {
    auto m = frag::catalog::half_quarter();
    std::vector<double> grid;
    for (double p = -0.9; p <= 2.05; p += 0.1) grid.push_back(p);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      CHECK(frag::phi(*m, grid[i]) > frag::phi(*m, grid[i - 1]));
    }
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
      const double mid = frag::phi(*m, grid[i]);
      const double avg = 0.5 * (frag::phi(*m, grid[i - 1]) + frag::phi(*m, grid[i + 1]));
      CHECK(mid >= avg - 1e-12);
    }
  }

  TEST_CASE("domain guard below the lower index") {
    auto m = frag::catalog::binary(0.5);
    CHECK_RAISES(Errc::below_lower_index, frag::phi(*m, -1.0));
    CHECK_RAISES(Errc::below_lower_index, frag::phi(*m, -1.5));
    CHECK_RAISES(Errc::below_lower_index, frag::phi_prime(*m, -1.0));
    // Configured lower index narrows the domain.
    CHECK_RAISES(Errc::below_lower_index, frag::phi(*m, -0.5, -0.4));
    CHECK(frag::phi(*m, -0.3, -0.4) < 0.0);
  }

  TEST_CASE("malthusian parameter") {
    // Conservative: exactly zero, no root finding.
    auto m73 = frag::catalog::from_atoms({{1.0, {0.7, 0.3}}});
    CHECK(frag::malthusian(*m73) == 0.0);

    // Dissipative golden-ratio oracle.
    auto hq = frag::catalog::half_quarter();
    const double p_star = frag::malthusian(*hq);
    CHECK(testutil::close(p_star, p_star_hq(), 1e-10));
    CHECK(testutil::close(frag::phi(*hq, p_star), 0.0, 1e-11));

    // Rate scaling does not move the root.
    auto hq3 = frag::catalog::half_quarter(3.0);
    CHECK(testutil::close(frag::malthusian(*hq3), p_star, 1e-10));

    // A single fragment of mass 1/4: phi > 0 on the whole domain.
    auto quarter = frag::catalog::from_atoms({{1.0, {0.25}}});
    CHECK_RAISES(Errc::no_malthusian_root, frag::malthusian(*quarter));
  }

  TEST_CASE("tilted exponent is a phi difference") {
    auto half = frag::catalog::binary(0.5);
    CHECK(testutil::close(frag::tilted_exponent(*half, 1.0, 1.0), 0.25, 1e-12));
    auto hq = frag::catalog::half_quarter();
    for (double p : {-0.2, 0.0, 0.5}) {
      for (double lambda : {0.5, 1.0, 2.0}) {
        CHECK(testutil::close(frag::tilted_exponent(*hq, p, lambda),
                              frag::phi(*hq, p + lambda) - frag::phi(*hq, p), 1e-12));
      }
    }
    CHECK_RAISES(Errc::below_lower_index, frag::tilted_exponent(*hq, -1.0, 0.5));
    CHECK_RAISES(Errc::below_lower_index, frag::tilted_exponent(*hq, 0.0, -1.5));
  }

  TEST_CASE("biggins threshold solves the speed equation") {
    auto m73 = frag::catalog::from_atoms({{1.0, {0.7, 0.3}}});
    const double p_bar = frag::biggins_threshold(*m73);
    CHECK(p_bar > 1.3);
    CHECK(p_bar < 1.5);
    const double gap =
        (1.0 + p_bar) * frag::phi_prime(*m73, p_bar) - frag::phi(*m73, p_bar);
    CHECK(std::fabs(gap) <= 1e-9);

    // Rate doubling leaves the root unchanged.
    auto m73x2 = frag::catalog::from_atoms({{2.0, {0.7, 0.3}}});
    CHECK(testutil::close(frag::biggins_threshold(*m73x2), p_bar, 1e-9));

    // Dyadic case solves 2^{-p} (1 + (1+p) log 2) = 1.
    auto half = frag::catalog::binary(0.5);
    const double p_bar_half = frag::biggins_threshold(*half);
    CHECK(testutil::close(std::exp2(-p_bar_half) * (1.0 + (1.0 + p_bar_half) * kLog2), 1.0,
                          1e-9));
    CHECK(p_bar_half > 1.40);
    CHECK(p_bar_half < 1.44);
  }

  TEST_CASE("assumption report on the dissipative catalog measure") {
    auto hq = frag::catalog::half_quarter();
    const frag::AssumptionReport r = frag::assumption_report(*hq);
    CHECK_FALSE(r.conservative);
    CHECK(r.a1);
    CHECK(testutil::close(r.phi_prime_at_zero, kLog2, 1e-12));
    CHECK(r.a2);
    CHECK(testutil::close(r.p_star, p_star_hq(), 1e-10));
    CHECK(r.a3);
    CHECK(r.a3_p0 == 2.0);
    // At p*, sum s^(1+p*) = u + u^2 = 1 exactly, so the second moment is 1.
    CHECK(testutil::close(r.a3_value, 1.0, 1e-9));
    CHECK(testutil::close(r.phi_at_zero, 0.25, 1e-12));
  }

  TEST_CASE("assumption report on a conservative measure") {
    auto m73 = frag::catalog::from_atoms({{1.0, {0.7, 0.3}}});
    const frag::AssumptionReport r = frag::assumption_report(*m73);
    CHECK(r.conservative);
    CHECK(r.a1);
    CHECK(r.a2);
    CHECK(r.p_star == 0.0);
    CHECK(r.a3);
    CHECK(r.a3_p0 == 2.0);
    CHECK(testutil::close(r.a3_value, 1.0, 1e-10));
    CHECK(testutil::close(r.phi_at_zero, 0.0, 1e-14));
  }

  TEST_CASE("exponent context freezes the roots") {
    auto m73 = frag::catalog::from_atoms({{1.0, {0.7, 0.3}}});
    const frag::ExponentContext ctx = frag::ExponentContext::build(m73);
    CHECK(ctx.p_star() == 0.0);
    CHECK(ctx.conservative());
    CHECK(testutil::close(ctx.phi(1.0), 0.42, 1e-12));
    CHECK(testutil::close(ctx.phi_at_zero(), 0.0, 1e-14));
    CHECK(ctx.p_bar() > 1.3);
    CHECK(ctx.p_bar() < 1.5);

    auto hq = frag::catalog::half_quarter();
    const frag::ExponentContext dctx = frag::ExponentContext::build(hq);
    CHECK(testutil::close(dctx.p_star(), p_star_hq(), 1e-10));
    CHECK_FALSE(dctx.conservative());
  }
}

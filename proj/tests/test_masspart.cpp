#include <vector>

#include "doctest.h"
#include "frag/masspart.hpp"
#include "testutil.hpp"

using frag::Errc;
using frag::MassPartition;

TEST_SUITE("masspart") {
  TEST_CASE("normalized sorts descending and drops zeros") {
    MassPartition p = MassPartition::normalized({0.25, 0.0, 0.5, 0.0});
    REQUIRE(p.size() == 2);
    CHECK(p.term(0) == 0.5);
    CHECK(p.term(1) == 0.25);
    CHECK(p.sum() == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(p.dust() == doctest::Approx(0.25).epsilon(1e-15));
  }

  TEST_CASE("negative entries are rejected") {
    CHECK_RAISES(Errc::invalid_argument, MassPartition::normalized({0.5, -0.1}));
  }

  TEST_CASE("sum above one is rejected beyond tolerance") {
    CHECK_RAISES(Errc::sum_exceeds_one, MassPartition::normalized({0.7, 0.4}));
    // Within tolerance: accepted.
    MassPartition p = MassPartition::normalized({0.6, 0.4 + 1e-13});
    CHECK(p.size() == 2);
  }

  TEST_CASE("trivial partition detection") {
    CHECK(MassPartition::normalized({1.0}).is_trivial());
    CHECK(MassPartition::normalized({1.0 - 1e-13}).is_trivial());
    CHECK_FALSE(MassPartition::normalized({0.5}).is_trivial());
    CHECK_FALSE(MassPartition::normalized({0.5, 0.5}).is_trivial());
  }

  TEST_CASE("empty partition is all dust") {
    MassPartition p = MassPartition::normalized({});
    CHECK(p.size() == 0);
    CHECK(p.dust() == 1.0);
  }

  TEST_CASE("size-biased pick walks the cumulative bands") {
    MassPartition p = MassPartition::normalized({0.5, 0.25});
    CHECK(frag::size_biased_pick(p, 0.0).value() == 0);
    CHECK(frag::size_biased_pick(p, 0.4999).value() == 0);
    CHECK(frag::size_biased_pick(p, 0.5).value() == 1);
    CHECK(frag::size_biased_pick(p, 0.7499).value() == 1);
    // The remaining band is dust.
    CHECK_FALSE(frag::size_biased_pick(p, 0.75).has_value());
    CHECK_FALSE(frag::size_biased_pick(p, 0.9999).has_value());
  }

  TEST_CASE("size-biased pick covers conservative partitions fully") {
    MassPartition p = MassPartition::normalized({0.7, 0.3});
    CHECK(frag::size_biased_pick(p, 0.69).value() == 0);
    CHECK(frag::size_biased_pick(p, 0.71).value() == 1);
    CHECK(frag::size_biased_pick(p, 0.999999).has_value());
  }

  TEST_CASE("from_sorted trusts its input") {
    MassPartition p = MassPartition::from_sorted({0.5, 0.5});
    CHECK(p.size() == 2);
    CHECK(p.dust() == doctest::Approx(0.0).epsilon(1e-15));
  }
}

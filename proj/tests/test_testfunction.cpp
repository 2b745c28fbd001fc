#include <vector>

#include "doctest.h"
#include "frag/testfunction.hpp"
#include "testutil.hpp"

using frag::Errc;
using frag::TestFunction;

TEST_SUITE("testfunction") {
  TEST_CASE("constants and identity") {
    const TestFunction one = TestFunction::one();
    CHECK(one(0.0) == 1.0);
    CHECK(one(0.5) == 1.0);
    CHECK(one(1.0) == 1.0);
    CHECK(one(-0.1) == 0.0);
    CHECK(one(1.1) == 0.0);
    CHECK(one.id() == "one");
    CHECK(one.bound() == 1.0);

    const TestFunction id = TestFunction::identity();
    CHECK(id(0.25) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(id(1.0) == 1.0);
    CHECK(id.id() == "identity");
  }

  TEST_CASE("indicator is half-open with the top point in the last cell") {
    const TestFunction f = TestFunction::indicator(0.2, 0.5);
    CHECK(f(0.2) == 1.0);
    CHECK(f(0.49999) == 1.0);
    CHECK(f(0.5) == 0.0);
    CHECK(f(0.1) == 0.0);

    const TestFunction top = TestFunction::indicator(0.5, 1.0);
    CHECK(top(1.0) == 1.0);
    CHECK(top(0.5) == 1.0);
    CHECK(top(0.4999) == 0.0);

    CHECK_RAISES(Errc::invalid_argument, TestFunction::indicator(0.5, 0.5));
    CHECK_RAISES(Errc::invalid_argument, TestFunction::indicator(-0.1, 0.5));
    CHECK_RAISES(Errc::invalid_argument, TestFunction::indicator(0.2, 1.1));
  }

  TEST_CASE("piecewise validation") {
    CHECK_RAISES(Errc::invalid_argument,
                 TestFunction::piecewise({0.0, 0.5, 0.9}, {1.0, 2.0}));
    CHECK_RAISES(Errc::invalid_argument,
                 TestFunction::piecewise({0.1, 0.5, 1.0}, {1.0, 2.0}));
    CHECK_RAISES(Errc::invalid_argument,
                 TestFunction::piecewise({0.0, 0.5, 0.5, 1.0}, {1.0, 2.0, 3.0}));
    const TestFunction f = TestFunction::piecewise({0.0, 0.25, 1.0}, {2.0, 3.0});
    CHECK(f(0.1) == 2.0);
    CHECK(f(0.25) == 3.0);
    CHECK(f(1.0) == 3.0);
    CHECK(f.bound() == 3.0);
  }

  TEST_CASE("polynomial with nonnegative coefficients") {
    const TestFunction f = TestFunction::polynomial({1.0, 2.0, 3.0});
    CHECK(f(0.5) == doctest::Approx(1.0 + 1.0 + 0.75).epsilon(1e-15));
    CHECK(f(0.0) == 1.0);
    CHECK(f(1.0) == 6.0);
    CHECK(f.bound() == doctest::Approx(6.0).epsilon(1e-15));
    CHECK_RAISES(Errc::invalid_argument, TestFunction::polynomial({1.0, -0.5}));
    CHECK_RAISES(Errc::invalid_argument, TestFunction::polynomial({}));
  }

  TEST_CASE("equal bins form a partition of unity") {
    const std::vector<TestFunction> bins = TestFunction::equal_bins(16);
    REQUIRE(bins.size() == 16);
    CHECK(bins.front().id() == "bin00");
    CHECK(bins.back().id() == "bin15");
    for (double u : {0.0, 0.031, 0.0625, 0.49999, 0.5, 0.875, 0.999, 1.0}) {
      double acc = 0.0;
      for (const TestFunction& b : bins) acc += b(u);
      CHECK(acc == 1.0);
    }
  }

  TEST_CASE("default library is bins plus one plus identity") {
    const std::vector<TestFunction> lib = TestFunction::default_library();
    REQUIRE(lib.size() == 18);
    CHECK(lib[16].id() == "one");
    CHECK(lib[17].id() == "identity");
  }
}

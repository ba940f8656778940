#include "doctest.h"

#include "approxsat/rational.hpp"

using namespace approxsat;

TEST_CASE("rational parsing and formatting") {
  CHECK(parse_rat("3/4") == Rat(3, 4));
  CHECK(parse_rat("-9/20") == Rat(-9, 20));
  CHECK(parse_rat("7") == Rat(7));
  CHECK(format_rat(Rat(6, 8)) == "3/4");
  CHECK_THROWS_AS(parse_rat("1.5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rat(""), std::invalid_argument);
}

TEST_CASE("sqrt enclosures are certified and tight") {
  for (long n : {2L, 3L, 5L, 17L}) {
    Interval iv = sqrt_enclosure(Rat(n), Rat(1, 1 << 20));
    CHECK(iv.lo * iv.lo <= Rat(n));
    CHECK(iv.hi * iv.hi >= Rat(n));
    CHECK(iv.width() <= Rat(1, 1 << 20));
  }
  SUBCASE("perfect squares are exact") {
    Interval iv = sqrt_enclosure(Rat(9, 4), Rat(1, 1024));
    CHECK(iv.lo == Rat(3, 2));
    CHECK(iv.hi == Rat(3, 2));
  }
  SUBCASE("zero") {
    Interval iv = sqrt_enclosure(Rat(0), Rat(1, 2));
    CHECK(iv.lo == 0);
    CHECK(iv.hi == 0);
  }
}

TEST_CASE("rat_pow") {
  CHECK(rat_pow(Rat(2, 3), 0) == Rat(1));
  CHECK(rat_pow(Rat(2, 3), 3) == Rat(8, 27));
  CHECK(pow2_inv(10) == Rat(1, 1024));
}

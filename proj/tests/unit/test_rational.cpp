#include <doctest.h>

#include "kolmo/error.hpp"
#include "kolmo/rational.hpp"

using namespace kolmo;

TEST_CASE("parse_rational accepts fractions, decimals and exponents exactly") {
  CHECK(parse_rational("145/48") == Rational(145, 48));
  CHECK(parse_rational("0.36") == Rational(9, 25));
  CHECK(parse_rational("4.014") == Rational(2007, 500));
  CHECK(parse_rational("-1.5") == Rational(-3, 2));
  CHECK(parse_rational("1e-3") == Rational(1, 1000));
  CHECK(parse_rational("2.5E2") == Rational(250));
  CHECK(parse_rational(" 7 ") == Rational(7));
  CHECK(parse_rational("6/4") == Rational(3, 2));
}

TEST_CASE("parse_rational rejects malformed literals") {
  for (const char* bad : {"", "abc", "1/0", "1.2.3", "1/2/3", "--1", ".", "1e"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_rational(bad), Error);
  }
}

TEST_CASE("format_rational is canonical") {
  CHECK(format_rational(Rational(50, 15)) == "10/3");
  CHECK(format_rational(Rational(4, 2)) == "2");
  CHECK(format_rational(Rational(-1, 25)) == "-1/25");
}

TEST_CASE("sign_plus_sqrt decides a + b sqrt(c) exactly") {
  CHECK(sign_plus_sqrt(Rational(1), Rational(-1), Rational(1)) == 0);
  CHECK(sign_plus_sqrt(Rational(3, 2), Rational(-1), Rational(2)) == 1);   // 1.5 - 1.414
  CHECK(sign_plus_sqrt(Rational(7, 5), Rational(-1), Rational(2)) == -1);  // 1.4 - 1.414
  CHECK(sign_plus_sqrt(Rational(-1), Rational(1), Rational(2)) == 1);
  CHECK(sign_plus_sqrt(Rational(0), Rational(-2), Rational(3)) == -1);
  CHECK(sign_plus_sqrt(Rational(-2), Rational(5), Rational(0)) == -1);
  CHECK_THROWS_AS(sign_plus_sqrt(Rational(0), Rational(1), Rational(-1)), Error);
}

TEST_CASE("pow handles negative exponents") {
  CHECK(pow(Rational(2, 3), 3) == Rational(8, 27));
  CHECK(pow(Rational(2, 3), -2) == Rational(9, 4));
  CHECK(pow(Rational(5), 0) == Rational(1));
}

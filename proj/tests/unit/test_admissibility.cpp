#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kolmo/admissibility.hpp"
#include "kolmo/error.hpp"

using namespace kolmo;
using namespace kolmo::admissibility;

// Expected values below were computed independently with 30-digit mpmath
// evaluation of the closed forms.

TEST_CASE("star_margin examples") {
  CHECK(star_margin(Rational(145, 48), parse_rational("0.36")) == doctest::Approx(0.0138888888888889).epsilon(1e-12));
  CHECK(star_margin(parse_rational("4.014"), parse_rational("0.1225")) == doctest::Approx(0.0917806975).epsilon(1e-12));
  CHECK(star_margin(Rational(4), Rational(0)) == 2.0);
  CHECK(star_margin_sign(Rational(145, 48), parse_rational("0.36")) == 1);
  CHECK_THROWS_AS(star_margin(Rational(2), Rational(0)), Error);
}

TEST_CASE("star_prime_margin examples") {
  CHECK(star_prime_margin(Rational(6), Rational(1, 25)) == doctest::Approx(0.173150190061198).epsilon(1e-12));
  CHECK(star_prime_margin(parse_rational("6.5"), Rational(1, 25)) == doctest::Approx(-0.380356365990403).epsilon(1e-12));
  CHECK(star_prime_margin_sign(parse_rational("6.5"), Rational(1, 25)) == -1);
  CHECK(star_prime_margin(Rational(3), Rational(0)) == 2.0);
  CHECK_THROWS_AS(star_prime_margin(Rational(1), Rational(0)), Error);
}

TEST_CASE("delta caps") {
  CHECK(delta_max_low_dim(Rational(145, 48)) == doctest::Approx(0.363898305177747).epsilon(1e-12));
  CHECK(delta_max_low_dim(Rational(3)) == doctest::Approx(0.371460638945291).epsilon(1e-12));
  // the bracket closes at q = 4 + 2 sqrt(2)
  CHECK(delta_max_low_dim(parse_rational("6.8284")) < 1e-9);
  CHECK_THROWS_AS(delta_max_low_dim(Rational(7)), Error);

  const auto high = delta_max_high_dim(Rational(6), Rational(25, 4121));
  CHECK(high.delta_max == doctest::Approx(0.0428777701758977).epsilon(1e-12));
  CHECK(high.side_condition);
  CHECK(delta_max_high_dim(Rational(6), Rational(999999, 1000000)).delta_max < 1e-12);
  CHECK_THROWS_AS(delta_max_high_dim(Rational(6), Rational(1)), Error);
  CHECK_THROWS_AS(delta_max_high_dim(Rational(6), Rational(0)), Error);

  const auto c7 = bound_constants(Rational(7));
  CHECK(c7.a == Rational(36, 625));
  CHECK(c7.c_new / to_double(c7.c_old) == doctest::Approx(1.42968771966556).epsilon(1e-12));
}

TEST_CASE("bound_constants at q = 6") {
  const auto c = bound_constants(Rational(6));
  CHECK(c.a == Rational(25, 256));
  CHECK(c.mu_default == Rational(25, 4121));
  CHECK(c.c_old == Rational(1, 36));
  CHECK(c.c_new == doctest::Approx(0.0428777701758977).epsilon(1e-12));
  CHECK(c.mu_alt == doctest::Approx(0.00603012760756732).epsilon(1e-12));
  CHECK(c.mu_alt < to_double(c.mu_default));
  // large q: the ratio approaches one
  const auto big = bound_constants(Rational(100000));
  CHECK(big.c_new / to_double(big.c_old) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("admissible follows the dimension dispatch") {
  CHECK(admissible(3, Rational(145, 48), parse_rational("0.36")));
  CHECK(admissible(5, Rational(6), Rational(1, 25)));
  CHECK_FALSE(admissible(5, parse_rational("6.5"), Rational(1, 25)));
  CHECK_FALSE(admissible(3, Rational(145, 48), parse_rational("0.37")));
  CHECK_THROWS_AS(admissible(2, Rational(3), Rational(1, 10)), Error);
  CHECK_THROWS_AS(admissible(5, Rational(5), Rational(1, 10)), Error);
}

TEST_CASE("a margin that vanishes exactly is indeterminate") {
  // star_margin = (q-1) - ((q s + q - 2)/2)^2 vanishes at q = 5, s = 1/5.
  const Rational q(5), delta(1, 25);
  CHECK(star_margin_sign(q, delta) == 0);
  CHECK(std::abs(star_margin(q, delta)) < 1e-12);
  CHECK(classify(4, q, delta) == Verdict::indeterminate);
  CHECK_FALSE(admissible(4, q, delta));
}

TEST_CASE("property: margins decrease in delta and the low cap is consistent with star_margin") {
  std::mt19937_64 rng(20240917);
  std::uniform_int_distribution<int> qnum(2001, 7000), dnum(0, 20000);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const Rational q(qnum(rng), 1000);
    const Rational delta(dnum(rng), 20000);
    const Rational smaller = delta * Rational(9, 10);
    CHECK(star_margin(q, smaller) >= star_margin(q, delta));
    CHECK(star_prime_margin(q, smaller) >= star_prime_margin(q, delta));
    if (4 * (q - 1) > (q - 2) * (q - 2)) {
      const int s = star_margin_sign(q, delta);
      const double cap = delta_max_low_dim(q);
      const double dd = to_double(delta);
      if (std::abs(dd - cap) > 1e-12) {
        CHECK((s > 0) == (dd < cap));
        ++checked;
      }
    }
    // exact sign agrees with binary64 away from zero
    const double m = star_prime_margin(q, delta);
    if (std::abs(m) > 1e-9) CHECK((m > 0) == (star_prime_margin_sign(q, delta) > 0));
  }
  CHECK(checked > 500);
}

TEST_CASE("property: mu_alt < mu_default on (2.5, 100]") {
  for (int k = 251; k <= 10000; k += 7) {
    const auto c = bound_constants(Rational(k, 100));
    CHECK(c.mu_alt < to_double(c.mu_default));
  }
}

TEST_CASE("ratio_table") {
  const auto one = ratio_table(5, 5, Rational(1));
  REQUIRE(one.size() == 1);
  CHECK(one[0].ratio == doctest::Approx(1.54359972633232).epsilon(1e-12));

  const auto rows = ratio_table(5, 40, Rational(1));
  double previous = 1e9;
  for (const auto& r : rows) {
    CHECK(r.ratio > 1.0);
    CHECK(r.stronger_holds);
    CHECK(r.ratio < previous);
    previous = r.ratio;
  }
  // ratio behaves like ((q-1)/(q-2))^2, so the approach to 1 is slow
  CHECK(ratio_table(400, 400, Rational(1)).front().ratio < 1.01);

  std::ostringstream csv;
  write_ratio_csv(csv, one);
  CHECK(csv.str().rfind("d,q,c_old,c_new,ratio\n5,6,", 0) == 0);

  // d = 3, 4 fall back to the low-dimensional cap
  const auto low = ratio_table(3, 4, Rational(1, 100));
  CHECK(low[0].c_new == doctest::Approx(delta_max_low_dim(Rational(301, 100))));
}

TEST_CASE("report and json field names") {
  AdmissibilityQuery query{3, Rational(145, 48), parse_rational("0.36"), std::nullopt};
  const auto report = make_report(query);
  CHECK(report.admissible);
  const auto j = to_json(report);
  for (const char* key : {"star_margin", "star_prime_margin", "delta_max_low", "delta_max_high", "a", "mu_default",
                          "mu_alt", "c_old", "c_new", "admissible"}) {
    CAPTURE(key);
    CHECK(j.contains(key));
  }
  CHECK(j["star_margin"].get<double>() == doctest::Approx(0.0138888888888889).epsilon(1e-12));
  CHECK(j["a"].get<std::string>() == format_rational(bound_constants(Rational(145, 48)).a));

  AdmissibilityQuery bad{3, Rational(145, 48), parse_rational("0.36"), Rational(2)};
  CHECK_THROWS_AS(make_report(bad), Error);
}

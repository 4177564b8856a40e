#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kolmo/error.hpp"
#include "kolmo/moser.hpp"

using namespace kolmo;
using namespace kolmo::moser;

// Log-Gamma reference values from a 30-digit mpmath evaluation of the product form.

TEST_CASE("reference schedule d=5 q=6 r0=2") {
  const auto s = build_schedule(5, Rational(6), Rational(2), 3, 20);
  CHECK(s.beta == Rational(1, 16));
  CHECK(s.t_frak == Rational(16, 15));
  CHECK(s.j1 == Rational(8, 5));
  CHECK(s.x_prime == Rational(3, 2));
  REQUIRE(s.size() == 20);
  CHECK(s.r_seq[0] == Rational(10, 3));
  CHECK(s.r_seq[1] == Rational(50, 9));
  CHECK(s.r_closed[0] == Rational(10, 3));
  CHECK(format_rational(s.r_seq[19]) == "222425293381745672582794/2660205384063720703125");
  CHECK(s.a_env == 50);
  CHECK(s.b_env == Rational(25, 8));
  CHECK(s.r_seq[0] == s.b_env * s.t_frak);

  CHECK(s.log_Gamma_root[0] == doctest::Approx(0.361191841297781).epsilon(1e-12));
  CHECK(s.log_Gamma_root[1] == doctest::Approx(0.539826495487127).epsilon(1e-12));
  CHECK(s.log_Gamma_root[19] == doctest::Approx(1.38991215643252).epsilon(1e-12));

  const auto lim = schedule_limits(s);
  CHECK(lim.alpha_bound == Rational(12, 25));
  CHECK(lim.gamma_lower == Rational(1, 25));
  CHECK(lim.gamma_upper == 1);
  CHECK(lim.log_Gamma_root_bound == doctest::Approx(23.7342688494206).epsilon(1e-12));
  CHECK(lim.log_Gamma_bound == doctest::Approx(6 * 23.7342688494206).epsilon(1e-12));

  const auto rep = verify_schedule(s);
  CHECK(rep.passed);
  CHECK(rep.failed_identity.empty());
  CHECK(rep.identities_checked > 200);
}

TEST_CASE("beta formula reproduces the reference choice at q = d+1") {
  for (int d = 5; d <= 30; ++d) {
    Rational expected(2, d * d + d + 2);
    expected.canonicalize();
    CHECK(select_beta(d, Rational(d + 1)) == expected);
  }
}

TEST_CASE("identities hold exactly across the reference grid of parameters") {
  for (int d = 5; d <= 8; ++d)
    for (int r0 : {2, 3}) {
      const auto s = build_schedule(d, Rational(d + 1), Rational(r0), 3, 20);
      const auto rep = verify_schedule(s);
      INFO("d=" << d << " r0=" << r0 << " failed: " << rep.failed_identity << " at " << rep.failed_index);
      CHECK(rep.passed);
      for (std::size_t n = 1; n < s.size(); ++n) CHECK(s.Gamma_seq[n] > s.Gamma_seq[n - 1]);
    }
}

TEST_CASE("off-reference q and d") {
  const auto s = build_schedule(3, Rational(7, 2), Rational(3), 4, 15, Rational(9, 25));
  CHECK(s.t_frak == 1 / (1 - s.beta));
  CHECK(s.t_frak == s.j1 / s.x_prime);
  CHECK(verify_schedule(s).passed);
}

TEST_CASE("degenerate and invalid inputs") {
  const auto empty = build_schedule(5, Rational(6), Rational(2), 3, 0);
  CHECK(empty.size() == 0);
  CHECK(verify_schedule(empty).passed);
  CHECK_THROWS_AS(schedule_limits(empty), Error);
  CHECK(verify_schedule(build_schedule(5, Rational(6), Rational(2), 3, 1)).passed);

  // 2/(2 - sqrt(delta)) = 2/(2 - 1/5) = 10/9
  CHECK_FALSE(seed_exponent_ok(Rational(10, 9), Rational(1, 25)));
  CHECK(seed_exponent_ok(Rational(10, 9) + Rational(1, 1000000), Rational(1, 25)));
  CHECK_THROWS_AS(build_schedule(5, Rational(6), Rational(1), 3, 5), Error);
  CHECK_THROWS_AS(build_schedule(5, Rational(6), Rational(2), 2, 5), Error);
  CHECK_THROWS_AS(build_schedule(5, Rational(5), Rational(2), 3, 5), Error);
}

TEST_CASE("nu branches") {
  const auto s = build_schedule(5, Rational(6), Rational(2), 3, 5);
  // gamma/(r0 (x-1)) = (1/25)/4 ; 1/(r0 (x-1)) = 1/4
  CHECK(nu(s, 0.5) == doctest::Approx(std::pow(0.5, 0.01)));
  CHECK(nu(s, 16.0) == doctest::Approx(2.0));
  CHECK(nu(s, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(nu(s, 0.0), Error);
}

TEST_CASE("schedule csv") {
  std::ostringstream out;
  write_schedule_csv(out, build_schedule(5, Rational(6), Rational(2), 3, 2));
  const std::string text = out.str();
  CHECK(text.rfind("n,r_n,alpha_n,gamma_n,Gamma_n", 0) == 0);
  CHECK(text.find("\n1,10/3,") != std::string::npos);
  CHECK(text.find("\n2,50/9,") != std::string::npos);
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "kolmo/drift.hpp"
#include "kolmo/error.hpp"

using namespace kolmo;

TEST_CASE("hardy drift values") {
  const auto b = FormBoundedDrift::hardy(3, parse_rational("0.36"));
  CHECK(b.kind() == DriftKind::hardy);
  CHECK(b.g().is_zero());
  auto v = b.eval(0.0, {1.0, 0.0, 0.0});
  CHECK(v[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(v[1] == 0.0);
  v = b.eval(0.0, {0.0, 0.0, 2.0});
  CHECK(v[2] == doctest::Approx(0.15).epsilon(1e-15));
  CHECK_THROWS_AS(b.eval(0.0, {0.0, 0.0, 0.0}), Error);
  try {
    b.eval(0.0, {0.0, 0.0, 0.0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singularity);
  }

  const auto b5 = FormBoundedDrift::hardy(5, Rational(1, 25));
  const auto w = b5.eval(0.0, {0.0, 0.0, 0.0, 0.0, 1.0});
  CHECK(w[4] == doctest::Approx(0.3));
  CHECK_THROWS_AS(FormBoundedDrift::hardy(2, Rational(1)), Error);
  CHECK_THROWS_AS(FormBoundedDrift::hardy(3, Rational(0)), Error);
}

TEST_CASE("|b(x)| |x| is the Hardy coefficient") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (int d = 3; d <= 7; ++d) {
    const auto b = FormBoundedDrift::hardy(d, Rational(1, 4));
    const double c = 0.5 * (d - 2) / 2.0;
    for (int i = 0; i < 20; ++i) {
      std::vector<double> x(d);
      double r2 = 0;
      for (auto& xi : x) r2 += (xi = n01(rng)) * xi;
      const auto v = b.eval(0.0, x);
      double n2 = 0;
      for (double vi : v) n2 += vi * vi;
      CHECK(std::sqrt(n2 * r2) == doctest::Approx(c).epsilon(1e-14));
    }
  }
}

TEST_CASE("thresholds and supercritical tag") {
  CHECK(nonexistence_threshold(3) == 36);
  CHECK(nonexistence_threshold(4) == 16);
  CHECK(to_double(nonexistence_threshold(5)) == doctest::Approx(100.0 / 9.0));
  CHECK(FormBoundedDrift::hardy(3, Rational(49)).supercritical());
  CHECK_FALSE(FormBoundedDrift::hardy(3, Rational(36)).supercritical());
  CHECK_FALSE(FormBoundedDrift::hardy(3, Rational(16)).supercritical());
}

TEST_CASE("Hardy constant consistency") {
  // delta ((d-2)/2)^2 (2/(d-2))^2 = delta
  for (int d = 3; d <= 10; ++d) {
    Rational half(d - 2, 2), inv(2, d - 2);
    half.canonicalize();
    inv.canonicalize();
    CHECK(Rational(9, 25) * half * half * inv * inv == Rational(9, 25));
  }
}

TEST_CASE("radial profile reconstructs evaluation") {
  const auto b = FormBoundedDrift::hardy(3, parse_rational("0.36"));
  const auto p = b.radial_profile();
  CHECK(p(0.0, 2.0) == doctest::Approx(0.15));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> x{u(rng), u(rng), u(rng)};
    const double r = std::hypot(x[0], x[1], x[2]);
    const auto v = b.eval(0.0, x);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(v[k] - p(0.0, r) * x[k] / r) < 1e-14);
  }
  CHECK(FormBoundedDrift::zero(3).radial_profile()(0.0, 1.0) == 0.0);
  const auto bump = FormBoundedDrift::bump({0.5, 0, 0}, {1, 0, 0}, 1.0);
  CHECK_THROWS_AS(bump.radial_profile(), Error);
  try {
    bump.radial_profile();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_radial);
  }
}

TEST_CASE("zero and constant drifts") {
  const auto z = FormBoundedDrift::zero(3);
  CHECK(z.eval(1.0, {0.0, 0.0, 0.0}) == std::vector<double>{0, 0, 0});
  CHECK(z.sup_norm() == 0.0);
  const auto c = FormBoundedDrift::constant({1.0, -2.0, 2.0});
  CHECK(c.eval(3.0, {5.0, 0.0, 0.0}) == std::vector<double>{1, -2, 2});
  CHECK(c.sup_norm() == doctest::Approx(3.0));
  CHECK(c.g().value == doctest::Approx(9.0));
  CHECK_FALSE(c.time_dependent());
}

TEST_CASE("g classes") {
  CHECK(GClass::zero().integral(5.0) == 0.0);
  CHECK(GClass::constant(2.0).integral(1.5) == doctest::Approx(3.0));
  const auto g = GClass::tabulated({0.0, 1.0, 2.0}, {0.0, 2.0, 0.0});
  CHECK(g(0.5) == doctest::Approx(1.0));
  CHECK(g(3.0) == 0.0);
  CHECK(g.integral(2.0) == doctest::Approx(2.0));
  CHECK(g.integral(1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(GClass::tabulated({0.0, 0.0}, {1.0, 1.0}), Error);
}

TEST_CASE("time window and reversal") {
  TimeWindow w{2.0, 0.01};
  CHECK(w(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w(2.0) == doctest::Approx(0.5).epsilon(1e-12));

  RadialTable t{0.1, {1.0, 1.0, 1.0, 1.0, 1.0}};
  const auto b = FormBoundedDrift::radial_table(3, t, Rational(1, 4), GClass::zero(), DriftKind::bounded_smooth, w);
  CHECK(b.time_dependent());
  const auto br = b.time_reversed(0.5);
  // b~(t) = b(0.5 - t)
  CHECK(br.eval(0.5, {0.2, 0, 0})[0] == doctest::Approx(b.eval(0.0, {0.2, 0, 0})[0]));
  CHECK(br.eval(0.1, {0.2, 0, 0})[0] == doctest::Approx(b.eval(0.4, {0.2, 0, 0})[0]));
  CHECK(br.radial_profile()(0.5, 0.2) == doctest::Approx(0.5));
  const auto back = br.time_reversed(0.5);
  CHECK(back.eval(0.1, {0.2, 0, 0})[0] == doctest::Approx(b.eval(0.1, {0.2, 0, 0})[0]));
}

TEST_CASE("gridded field interpolation") {
  GriddedVectorField f;
  f.d = 2;
  f.half_width = 1.0;
  f.n = 4;
  f.values.assign(2 * 16, 0.0);
  // component 0 equals the x coordinate at each node, so interpolation is exact
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) f.values[i * 4 + j] = -1.0 + (i + 0.5) * 0.5;
  const auto b = FormBoundedDrift::gridded(f, Rational(1, 4), GClass::zero());
  CHECK(b.eval(0.0, {0.1, 0.3})[0] == doctest::Approx(0.1));
  CHECK(b.eval(0.0, {2.0, 0.0})[0] == 0.0);
  CHECK_FALSE(b.radial());
}

TEST_CASE("config round trip") {
  const auto h = drift_from_config(FormBoundedDrift::hardy(3, parse_rational("0.36")).to_config());
  CHECK(h.kind() == DriftKind::hardy);
  CHECK(h.delta() == Rational(9, 25));
  const auto c = drift_from_config(FormBoundedDrift::constant({0.5, 0, 0}).to_config());
  CHECK(c.eval(0.0, {0, 0, 0})[0] == 0.5);
  const auto bp = drift_from_config(FormBoundedDrift::bump({0, 0, 1}, {0, 2, 0}, 0.7).to_config());
  CHECK(bp.eval(0.0, {0, 0, 1})[1] == doctest::Approx(2.0));
  CHECK_THROWS_AS(drift_from_config({{"drift.kind", "weird"}}), Error);
  CHECK_THROWS_AS(drift_from_config({{"drift.kind", "hardy"}}), Error);
}

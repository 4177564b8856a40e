#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kolmo/error.hpp"
#include "kolmo/mollifier.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/philox.hpp"
#include "kolmo/sde.hpp"

using namespace kolmo;
using namespace kolmo::sde;

// Known-answer vectors from the Random123 distribution.
TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) == PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("path normals have unit moments and distinct streams") {
  double s = 0, s2 = 0, s4 = 0;
  const int n = 200000;
  std::array<double, 3> xi{};
  for (int p = 0; p < n / 3; ++p) {
    path_normals(5, static_cast<std::uint64_t>(p), 17, xi);
    for (double v : xi) {
      s += v;
      s2 += v * v;
      s4 += v * v * v * v;
    }
  }
  const double m = static_cast<double>(n / 3 * 3);
  CHECK(std::abs(s / m) < 0.01);
  CHECK(s2 / m == doctest::Approx(1.0).epsilon(0.01));
  CHECK(s4 / m == doctest::Approx(3.0).epsilon(0.03));
  std::array<double, 3> a{}, b{};
  path_normals(5, 1, 2, a);
  path_normals(5, 2, 1, b);
  CHECK(a[0] != b[0]);
  path_normals(6, 1, 2, b);
  CHECK(a[0] != b[0]);
}

TEST_CASE("Brownian moments") {
  EnsembleSpec s{FormBoundedDrift::zero(3), {0, 0, 0}, 1.0, 0.01, 20000, 3};
  const auto st = euler_maruyama(s, {{"r2", [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }},
                                     {"x", [](std::span<const double> x) { return x[0]; }}});
  CHECK(std::abs(st.means[0].mean - 6.0) <= 3 * st.means[0].se);
  CHECK(std::abs(st.means[1].mean) <= 3 * st.means[1].se);
  for (double v : st.position_variance) CHECK(v == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("constant drift shifts the mean") {
  EnsembleSpec s{FormBoundedDrift::constant({1.0, -0.5, 0.0}), {0.2, 0, 0}, 0.5, 0.01, 20000, 9};
  const auto st = euler_maruyama(s, {{"x", [](std::span<const double> x) { return x[0]; }},
                                     {"y", [](std::span<const double> x) { return x[1]; }}});
  CHECK(std::abs(st.means[0].mean - (0.2 - 0.5)) <= 3 * st.means[0].se);
  CHECK(std::abs(st.means[1].mean - 0.25) <= 3 * st.means[1].se);
}

TEST_CASE("statistics are reproducible and independent of the thread count") {
  EnsembleSpec s{FormBoundedDrift::constant({0.3, 0, 0}), {1, 0, 0}, 0.2, 0.01, 3000, 42};
  const std::vector<Functional> f{{"g", [](std::span<const double> x) { return std::exp(-x[0] * x[0]); }}};
  const std::vector<HitTarget> t{{0.5, 0.2}};
  set_jobs(1);
  const auto a = euler_maruyama(s, f, t);
  set_jobs(3);
  const auto b = euler_maruyama(s, f, t);
  set_jobs(1);
  CHECK(a.means[0].mean == b.means[0].mean);
  CHECK(a.means[0].se == b.means[0].se);
  CHECK(a.hit_fractions == b.hit_fractions);
  s.seed = 43;
  CHECK(euler_maruyama(s, f, t).means[0].mean != a.means[0].mean);
}

TEST_CASE("coupled pair agrees for drift-free motion") {
  EnsembleSpec s{FormBoundedDrift::zero(3), {1, 0, 0}, 0.5, 0.01, 2000, 1};
  const auto p = euler_maruyama_pair(s, {"x", [](std::span<const double> x) { return x[0]; }});
  CHECK(p.difference == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.coarse.mean == doctest::Approx(p.fine.mean).epsilon(1e-12));
}

TEST_CASE("weak comparison against the backward equation") {
  const RadialFunction g{"gaussian", [](double r) { return std::exp(-r * r); }};
  WeakCompareOptions o;
  o.n_paths = 20000;
  o.dt = 2e-3;
  o.seed = 5;
  o.radial = pde::RadialGrid{8.0, 800, 3};
  o.pde_dt = 2e-3;
  const auto zero = weak_compare(FormBoundedDrift::zero(3), g, {1, 0, 0}, o);
  CHECK(zero.pass);
  CHECK(zero.pde_value == doctest::Approx(constant_drift_gaussian({0, 0, 0}, {1, 0, 0}, 0.5)).epsilon(1e-3));
  const auto bn = mollifier::build_regularized_drift(FormBoundedDrift::hardy(3, Rational(36, 100)), 4, 0.01);
  const auto h = weak_compare(bn, g, {1, 0, 0}, o);
  CHECK(h.pass);
  CHECK(to_json(h)["verdict"] == "pass");
  CHECK_THROWS_AS(weak_compare(FormBoundedDrift::hardy(3, Rational(36, 100)), g, {1, 0, 0}, o), Error);
}

TEST_CASE("constant-drift closed form") {
  CHECK(constant_drift_gaussian({0, 0, 0}, {0, 0, 0}, 0.25) == doctest::Approx(std::pow(0.5, 1.5)));
  CHECK(constant_drift_gaussian({2, 0}, {1, 0}, 0.5) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("blowup probe") {
  BlowupOptions o;
  o.n_paths = 4000;
  o.seed = 2;
  const auto rows = blowup_probe(3, {Rational(0), Rational(16), Rational(49)}, {0.05, 0, 0}, o);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].hit_fraction < 0.05);
  CHECK(rows[1].hit_fraction > rows[0].hit_fraction);
  CHECK(rows[2].hit_fraction > rows[1].hit_fraction);
  o.T = 0.01;
  CHECK(blowup_probe(3, {Rational(16)}, {5, 0, 0}, o)[0].hit_fraction == 0.0);
  std::ostringstream out;
  write_blowup_csv(out, rows);
  CHECK(out.str().rfind("delta,hit_fraction,n_paths,dt\n0,", 0) == 0);
  CHECK_THROWS_AS(blowup_probe(3, {Rational(16)}, {0, 0, 0}, o), Error);
}

TEST_CASE("invalid ensembles are rejected") {
  EnsembleSpec s{FormBoundedDrift::hardy(3, Rational(1, 4)), {1, 0, 0}, 1.0, 0.01, 10, 0};
  CHECK_THROWS_AS(euler_maruyama(s, {}), Error);
  s.drift = FormBoundedDrift::zero(3);
  s.dt = 0.0;
  CHECK_THROWS_AS(euler_maruyama(s, {}), Error);
  s.dt = 0.01;
  s.x0 = {1, 0};
  CHECK_THROWS_AS(euler_maruyama(s, {}), Error);
}

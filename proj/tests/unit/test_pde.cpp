#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "kolmo/error.hpp"
#include "kolmo/mollifier.hpp"
#include "kolmo/pde.hpp"

using namespace kolmo;
using namespace kolmo::pde;

namespace {

double heat_gaussian(double r2, double t, int d) { return std::pow(1.0 + 4.0 * t, -0.5 * d) * std::exp(-r2 / (1.0 + 4.0 * t)); }

double radial_error(int n_r) {
  const RadialGrid g{8.0, n_r, 3};
  SolveOptions o;
  o.t = 0.1;
  o.dt = 0.5 * g.dr() * g.dr();
  o.functionals = false;
  const auto res = solve_radial(FormBoundedDrift::zero(3), gaussian_initial(7.0), g, o);
  const auto& u = res.snapshots.back().values;
  double e = 0.0;
  for (int i = 0; i <= g.n_r; ++i) e = std::max(e, std::abs(u[static_cast<std::size_t>(i)] - heat_gaussian(g.r(i) * g.r(i), 0.1, 3)));
  return e;
}

SolveResult hardy_solve(int refine) {
  const auto bn = mollifier::build_regularized_drift(FormBoundedDrift::hardy(3, Rational(36, 100)), 4, 0.01);
  SolveOptions o;
  o.t = 0.5;
  o.dt = 1e-3 / std::pow(4.0, refine);
  o.q = Rational(145, 48);
  o.trace_every = 1 << (2 * refine);
  return solve_radial(bn, gaussian_initial(4.0), RadialGrid{8.0, 1000 << refine, 3}, o);
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace

TEST_CASE("radial heat solve converges at second order") {
  const double e1 = radial_error(400), e2 = radial_error(800);
  CHECK(e1 < 5e-4);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("Cartesian heat solve converges at second order") {
  auto err = [](int n) {
    const CartesianGrid g{5.0, n, 3};
    SolveOptions o;
    o.t = 0.1;
    o.dt = 0.1 * g.dx() * g.dx();
    o.functionals = false;
    const auto res = solve_cartesian(FormBoundedDrift::zero(3),
                                     [](std::span<const double> x) { return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])); },
                                     g, o);
    const auto& u = res.snapshots.back().values;
    const int m = n + 1;
    double e = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
          const double x = -5 + g.dx() * i, y = -5 + g.dx() * j, z = -5 + g.dx() * k;
          const double r2 = x * x + y * y + z * z;
          if (r2 <= 4.0) e = std::max(e, std::abs(u[static_cast<std::size_t>((i * m + j) * m + k)] - heat_gaussian(r2, 0.1, 3)));
        }
    return e;
  };
  const double ratio = err(20) / err(40);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("gradient L4 quadrature of a Gaussian") {
  const RadialGrid g{8.0, 2000, 3};
  SolutionField f{g, 0.0, {}};
  for (int i = 0; i <= g.n_r; ++i) f.values.push_back(i == g.n_r ? 0.0 : std::exp(-g.r(i) * g.r(i)));
  const double exact = 15.0 * std::pow(std::numbers::pi, 1.5) / 32.0;
  CHECK(exact == doctest::Approx(2.6101).epsilon(1e-4));
  CHECK(std::pow(grad_norms(f, Rational(4)).norm_q, 4) == doctest::Approx(exact).epsilon(1e-4));
}

TEST_CASE("mollified Hardy solve: identity, positivity, gradient bound") {
  const auto coarse = hardy_solve(0);
  const auto fine = hardy_solve(1);
  REQUIRE(coarse.trace.size() == fine.trace.size());
  for (const auto* r : {&coarse, &fine}) {
    CHECK(r->min_value >= 0.0);
    CHECK(r->max_value <= r->initial_max);
    for (std::size_t k = 0; k < r->trace.size(); ++k) CHECK(r->trace.I_q[k] >= r->trace.J_q[k]);
  }
  const double order = std::log2(max_of(coarse.trace.identity_residual) / max_of(fine.trace.identity_residual));
  CHECK(order >= 1.0);

  for (const auto* r : {&coarse, &fine}) {
    const auto rep = verify_gradient_bound(r->trace, Rational(145, 48), Rational(36, 100), GClass{});
    CHECK(rep.passed());
    CHECK(rep.kappa == doctest::Approx(1.0 / 72.0).epsilon(1e-9));
    CHECK(rep.time_coefficient == doctest::Approx(96.0 / 145.0));
    CHECK(rep.integral_bound_lhs <= rep.integral_bound_rhs * 1.01);
  }
}

TEST_CASE("trace CSV header") {
  const auto r = hardy_solve(0);
  std::ostringstream out;
  write_trace_csv(out, r.trace);
  CHECK(out.str().rfind("tau,sup_norm,grad_q,grad_qj_integrand,I_q,J_q,B_q,X_q,identity_residual\n", 0) == 0);
}

TEST_CASE("gradient bound rejects inadmissible pairs") {
  NormTrace t;
  t.d = 3;
  const auto rep = verify_gradient_bound(t, Rational(4), Rational(9, 10), GClass{});
  CHECK(rep.status == "inadmissible");
}

TEST_CASE("time derivative stencil is exact on quadratics") {
  const std::vector<double> t{0.0, 0.1, 0.3, 0.4};
  std::vector<double> y;
  for (double s : t) y.push_back(3 * s * s - s + 2);
  for (std::size_t k = 0; k < t.size(); ++k) CHECK(time_derivative(t, y, k) == doctest::Approx(6 * t[k] - 1));
}

TEST_CASE("Cauchy distances shrink along the approximation sequence") {
  CauchyOptions o;
  const auto tab = approximation_cauchy_check(FormBoundedDrift::hardy(3, Rational(36, 100)), gaussian_initial(4.0),
                                              RadialGrid{8.0, 1000, 3}, {2, 3, 4, 5}, {0.04, 0.02, 0.01, 0.005}, o);
  REQUIRE(tab.rows.size() == 3);
  CHECK(tab.decreasing_r);
  CHECK(tab.decreasing_inf);
  CHECK_THROWS_AS(approximation_cauchy_check(FormBoundedDrift::hardy(3, Rational(36, 100)), gaussian_initial(4.0),
                                             RadialGrid{8.0, 100, 3}, {2, 3}, {0.04, 0.02}, CauchyOptions{0.5, 1e-3, 1.2}),
                  Error);
}

TEST_CASE("solver preconditions") {
  const auto hardy = FormBoundedDrift::hardy(3, Rational(36, 100));
  SolveOptions o;
  CHECK_THROWS_AS(solve_cartesian(hardy, [](std::span<const double>) { return 0.0; }, CartesianGrid{}, o), Error);
  const auto c = FormBoundedDrift::constant({1.0, 0.0, 0.0});
  o.dt = 1.0;
  CHECK_THROWS_AS(solve_cartesian(c, [](std::span<const double>) { return 0.0; }, CartesianGrid{}, o), Error);
  // a wide initial profile leaks through the wall of a small domain
  SolveOptions w;
  w.t = 0.5;
  CHECK_THROWS_AS(solve_radial(FormBoundedDrift::zero(3), gaussian_initial(3.0), RadialGrid{3.0, 300, 3}, w), Error);
  // exact Hardy drift runs through the effective dimension
  w.functionals = false;
  const auto r = solve_radial(hardy, gaussian_initial(4.0), RadialGrid{8.0, 400, 3}, w);
  CHECK(r.min_value >= 0.0);
  CHECK(r.max_value <= 1.0);
  CHECK(parse_scheme("imex") == Scheme::imex);
  CHECK_THROWS_AS(parse_scheme("rk4"), Error);
}

TEST_CASE("schemes agree on a bounded drift") {
  const auto b = mollifier::build_regularized_drift(FormBoundedDrift::hardy(3, Rational(36, 100)), 2, 0.04);
  const RadialGrid g{8.0, 800, 3};
  std::vector<double> finals;
  for (Scheme s : {Scheme::implicit, Scheme::imex, Scheme::crank_nicolson}) {
    SolveOptions o;
    o.t = 0.2;
    o.dt = 2.5e-4;
    o.scheme = s;
    o.functionals = false;
    finals.push_back(solve_radial(b, gaussian_initial(4.0), g, o).snapshots.back().values[0]);
  }
  CHECK(finals[1] == doctest::Approx(finals[0]).epsilon(2e-3));
  CHECK(finals[2] == doctest::Approx(finals[0]).epsilon(2e-3));
}

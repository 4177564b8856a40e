#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kolmo/error.hpp"
#include "kolmo/formbound.hpp"
#include "kolmo/mollifier.hpp"

using namespace kolmo;
using namespace kolmo::formbound;

namespace {

SpaceTimeGrid geometric_grid(int d, int n) { return SpaceTimeGrid{TimeGrid{1.0, 1}, RadialMesh::geometric(d, 1.0, 22.0, n)}; }

}  // namespace

TEST_CASE("zero drift has zero ratio") {
  const auto est = estimate_form_bound(FormBoundedDrift::zero(3), shell_packets(3, {0.3, 0.5}, 0.1),
                                       SpaceTimeGrid{TimeGrid{1.0, 3}, RadialMesh::uniform(3, 1.0, 400)});
  CHECK(est.delta_hat == 0.0);
  for (const auto& r : est.rows) CHECK(r.lhs == 0.0);
}

TEST_CASE("Hardy: every ratio below delta, near-optimizers close to it") {
  const auto b = FormBoundedDrift::hardy(3, parse_rational("0.36"));
  const auto coarse = estimate_form_bound(b, near_optimizer_family(3, 1.0, 21.0), geometric_grid(3, 2000));
  const auto fine = estimate_form_bound(b, near_optimizer_family(3, 1.0, 21.0), geometric_grid(3, 4000));
  CHECK(coarse.delta_hat <= 0.36 * 1.02);
  CHECK(fine.delta_hat <= 0.36 * 1.02);
  CHECK(fine.delta_hat >= 0.36 * 0.8);
  CHECK(fine.delta_hat >= coarse.delta_hat);

  // the continuous ratio for psi = e^{eta s} without cutoffs is delta/(1 + 4 eta^2)
  const auto one = form_ratio(b, near_optimizer(3, 1.0, 21.0, 0.1, 0.2, 0.6), geometric_grid(3, 4000));
  CHECK(one.ratio < 0.36 / 1.04);

  const auto shells = estimate_form_bound(b, shell_packets(3, {0.2, 0.4, 0.6}, 0.1),
                                          SpaceTimeGrid{TimeGrid{0.5, 3}, RadialMesh::uniform(3, 1.0, 1000)});
  CHECK(shells.delta_hat <= 0.36);
}

TEST_CASE("Hardy in 5D with packets") {
  const auto b = FormBoundedDrift::hardy(5, Rational(1, 25));
  const auto est = estimate_form_bound(b, shell_packets(5, {0.0, 0.2, 0.4, 0.6}, 0.15),
                                       SpaceTimeGrid{TimeGrid{1.0, 3}, RadialMesh::uniform(5, 1.0, 2000)});
  CHECK(est.delta_hat <= 0.0408);
  CHECK(est.delta_hat > 0.0);
  const auto near = estimate_form_bound(b, near_optimizer_family(5, 1.0, 21.0), geometric_grid(5, 2000));
  CHECK(near.delta_hat <= 0.04 * 1.02);
}

TEST_CASE("bounded drift sanity bound") {
  const auto c = FormBoundedDrift::constant({0.6, 0.0, 0.8});
  const SpaceTimeGrid grid{TimeGrid{1.0, 3}, CartesianMesh{3, 2.0, 32}};
  for (const auto& f : gaussian_packets(3, {0.0, 0.5}, 0.4).members) {
    const auto r = form_ratio(c, f, grid);
    // |b|^2 = 1 = g, so lhs equals the mass term
    CHECK(r.lhs == doctest::Approx(r.mass_term).epsilon(1e-12));
    CHECK(r.ratio == doctest::Approx(0.0).scale(1.0));
  }
  const auto bump = FormBoundedDrift::bump({0.2, 0.0, 0.0}, {0.0, 1.5, 0.0}, 0.5);
  for (const auto& f : random_bumps(3, 4, 1.5, 3).members) {
    const auto r = form_ratio(bump, f, grid);
    CHECK(r.lhs <= 2.25 * r.mass_term / bump.g()(0.0) + 1e-12);
    CHECK(r.ratio <= 0.0);
  }
}

TEST_CASE("Cartesian and radial meshes agree on radial data") {
  const auto b = FormBoundedDrift::hardy(3, parse_rational("0.36"));
  const auto fam = shell_packets(3, {0.8}, 0.3);
  const auto rad = form_ratio(b, fam.members[0], SpaceTimeGrid{TimeGrid{1.0, 1}, RadialMesh::uniform(3, 2.5, 2000)});
  const auto cart = form_ratio(b, fam.members[0], SpaceTimeGrid{TimeGrid{1.0, 1}, CartesianMesh{3, 2.5, 80}});
  CHECK(cart.ratio == doctest::Approx(rad.ratio).epsilon(0.03));
  CHECK(cart.grad_term == doctest::Approx(rad.grad_term).epsilon(0.03));
}

TEST_CASE("estimate grows with the family") {
  const auto b = FormBoundedDrift::hardy(3, parse_rational("0.36"));
  auto fam = shell_packets(3, {0.5}, 0.1);
  const auto grid = geometric_grid(3, 2000);
  double prev = estimate_form_bound(b, fam, grid).delta_hat;
  for (const auto& m : near_optimizer_family(3, 1.0, 21.0).members) {
    fam.members.push_back(m);
    const double now = estimate_form_bound(b, fam, grid).delta_hat;
    CHECK(now >= prev);
    prev = now;
  }
}

TEST_CASE("mollified drift keeps the base form-bound") {
  const auto base = FormBoundedDrift::hardy(3, parse_rational("0.36"));
  const auto bn = mollifier::build_regularized_drift(base, 2, 0.01);
  auto fam = near_optimizer_family(3, 2.0, 6.0);
  for (auto& m : shell_packets(3, {0.1, 0.2, 0.4}, 0.1).members) fam.members.push_back(m);
  const auto est = estimate_form_bound(bn, fam, SpaceTimeGrid{TimeGrid{1.0, 5}, RadialMesh::geometric(3, 2.0, 8.0, 2000)});
  CHECK(est.delta_hat <= 0.36 * 1.05);
  CHECK(est.delta_hat > 0.0);
}

TEST_CASE("errors and CSV") {
  const auto b = FormBoundedDrift::hardy(3, parse_rational("0.36"));
  TestFunction flat;
  flat.id = "flat";
  flat.radial_f = [](double, double) { return 0.0; };
  CHECK_THROWS_AS(form_ratio(b, flat, geometric_grid(3, 100)), Error);
  const auto packets = gaussian_packets(3, {0.5}, 0.3);
  CHECK_THROWS_AS(form_ratio(b, packets.members[0], geometric_grid(3, 100)), Error);
  const auto bump = FormBoundedDrift::bump({0.2, 0.0, 0.0}, {0.0, 1.5, 0.0}, 0.5);
  CHECK_THROWS_AS(form_ratio(bump, shell_packets(3, {0.5}, 0.1).members[0], geometric_grid(3, 100)), Error);

  const auto fam = shell_packets(3, {0.5}, 0.1);
  const auto est = estimate_form_bound(b, fam, geometric_grid(3, 200));
  std::ostringstream out;
  write_form_csv(out, fam, est);
  CHECK(out.str().rfind("member_id,lhs,grad_term,mass_term,ratio\nshell_0.5,", 0) == 0);
}

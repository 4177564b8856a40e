#include "kolmo/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "kolmo/admissibility.hpp"
#include "kolmo/error.hpp"
#include "kolmo/formbound.hpp"
#include "kolmo/mollifier.hpp"
#include "kolmo/moser.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/pde.hpp"
#include "kolmo/sde.hpp"

namespace kolmo::acceptance {

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  bool ok = true;
  std::ostringstream note;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      if (!ok) note << "; ";
      note << "FAILED " << what;
      ok = false;
    }
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

const Rational kQ(145, 48);
const Rational kDelta(9, 25);

Result admissibility_signs() {
  Check c;
  using namespace admissibility;
  c.expect(star_margin_sign(kQ, kDelta) > 0, "star_margin(145/48, 0.36) > 0");
  c.expect(star_margin_sign(parse_rational("4.014"), parse_rational("0.1225")) > 0, "star_margin(4.014, 0.1225) > 0");
  for (int d = 5; d <= 20; ++d) {
    const Rational delta(1, d * d);
    c.expect(star_prime_margin_sign(Rational(d + 1), delta) > 0, "star_prime(d+1) > 0 at d=" + std::to_string(d));
    c.expect(star_prime_margin_sign(Rational(d) + Rational(6, 5), delta) < 0, "star_prime(d+1.2) < 0 at d=" + std::to_string(d));
  }
  if (c.ok) c.note << "star_margin(145/48,0.36)=" << fmt(star_margin(kQ, kDelta)) << ", 32 high-dimensional signs exact";
  return {1, "admissibility signs", c.ok, c.note.str()};
}

Result constant_comparison() {
  Check c;
  double lo = 1e300;
  for (const char* e : {"0.1", "0.5", "1"}) {
    for (const auto& row : admissibility::ratio_table(5, 15, parse_rational(e))) {
      c.expect(row.ratio > 1.0, std::string("ratio > 1 at eps=") + e + " d=" + std::to_string(row.d));
      c.expect(row.stronger_holds, std::string("c_old(d) < c_new(d+eps) at eps=") + e + " d=" + std::to_string(row.d));
      lo = std::min(lo, row.ratio);
    }
  }
  if (c.ok) c.note << "33 rows, min ratio " << fmt(lo);
  return {2, "constant comparison", c.ok, c.note.str()};
}

Result moser_schedule() {
  Check c;
  const auto s = moser::build_schedule(5, Rational(6), Rational(2), 3, 20);
  const auto rep = moser::verify_schedule(s);
  c.expect(rep.passed, "schedule identity " + rep.failed_identity);
  c.expect(s.r_seq == s.r_closed, "recursion equals closed form");
  const auto lim = moser::schedule_limits(s);
  c.expect(lim.alpha_bound == Rational(12, 25), "alpha bound 12/25");
  c.expect(lim.gamma_lower == Rational(1, 25), "gamma lower bound 1/25");
  for (std::size_t n = 0; n < s.size(); ++n) {
    c.expect(s.alpha_seq[n] <= lim.alpha_bound, "alpha_n <= bound");
    c.expect(s.gamma_seq[n] >= lim.gamma_lower && s.gamma_seq[n] <= 1, "gamma_n in bounds");
    c.expect(std::log(s.Gamma_seq[n]) <= lim.log_Gamma_bound * (1 + 1e-12), "Gamma_n bound");
  }
  if (c.ok) c.note << rep.identities_checked << " exact identities, log Gamma_20 root " << fmt(s.log_Gamma_root.back());
  return {3, "Moser schedule", c.ok, c.note.str()};
}

Result form_bound() {
  using namespace formbound;
  Check c;
  const auto b = FormBoundedDrift::hardy(3, kDelta);
  auto family = near_optimizer_family(3, 1.0, 21.0);
  const auto shells = shell_packets(3, {0.1, 0.2, 0.4, 0.6}, 0.05);
  family.members.insert(family.members.end(), shells.members.begin(), shells.members.end());
  double fine_hat = 0.0;
  for (int n : {2000, 4000}) {
    const SpaceTimeGrid grid{TimeGrid{1.0, 1}, RadialMesh::geometric(3, 1.0, 22.0, n)};
    const auto est = estimate_form_bound(b, family, grid);
    for (std::size_t i = 0; i < est.rows.size(); ++i)
      c.expect(est.rows[i].ratio <= 0.36 * 1.02, "ratio of " + family.members[i].id + " at N=" + std::to_string(n));
    fine_hat = est.delta_hat;
  }
  const SpaceTimeGrid fine{TimeGrid{1.0, 1}, RadialMesh::geometric(3, 1.0, 22.0, 4000)};
  const double near = estimate_form_bound(b, near_optimizer_family(3, 1.0, 21.0), fine).delta_hat;
  c.expect(near >= 0.36 * 0.8, "near-optimizers reach 0.288 (got " + fmt(near) + ")");
  if (c.ok) c.note << "delta_hat " << fmt(fine_hat) << " on the finer grid";
  return {4, "form bound", c.ok, c.note.str()};
}

Result mollifier_checks() {
  using namespace mollifier;
  Check c;
  // Gaussian at time s convolved with the heat kernel at eps is the Gaussian at s + eps
  const double s = 0.1, eps = 0.05, L = 4.0, h = 0.1;
  const int n = static_cast<int>(std::lround(2 * L / h)) + 1;
  GriddedField f = GriddedField::make({Axis{-L, h, n}, Axis{-L, h, n}, Axis{-L, h, n}}, false);
  auto heat = [](double t, double r2) { return std::pow(4 * std::numbers::pi * t, -1.5) * std::exp(-r2 / (4 * t)); };
  auto r2_at = [&](std::size_t idx) {
    const int i = static_cast<int>(idx / static_cast<std::size_t>(n * n)), j = static_cast<int>(idx / static_cast<std::size_t>(n) % static_cast<std::size_t>(n)),
              k = static_cast<int>(idx % static_cast<std::size_t>(n));
    const double x = -L + h * i, y = -L + h * j, z = -L + h * k;
    return x * x + y * y + z * z;
  };
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = heat(s, r2_at(i));
  const auto g = heat_mollify(f, eps, MollifyAxes::space);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.values.size(); ++i) worst = std::max(worst, std::abs(g.values[i] - heat(s + eps, r2_at(i))));
  const double rel = worst / heat(s + eps, 0.0);
  c.expect(rel < 1e-6, "semigroup composition (relative error " + fmt(rel) + ")");

  const auto base = FormBoundedDrift::hardy(3, kDelta);
  std::vector<double> scaled;
  for (double e : {0.04, 0.01, 0.0025}) scaled.push_back(build_regularized_drift(base, 2, e).sup_norm() * std::sqrt(e));
  for (std::size_t i = 1; i < scaled.size(); ++i)
    c.expect(scaled[i] / scaled[i - 1] >= 0.5 && scaled[i] / scaled[i - 1] <= 2.0, "sup-norm scaling ratio " + fmt(scaled[i] / scaled[i - 1]));

  const DistanceGrid grid{0.5, 1.5, 0.05, 24};
  const auto sel = select_epsilons(base, grid, 1.0, 4);
  for (std::size_t i = 1; i < sel.distances.size(); ++i)
    c.expect(sel.distances[i] < sel.distances[i - 1], "L2 distance decreasing at n=" + std::to_string(i + 1));
  if (c.ok) {
    c.note << "composition error " << fmt(rel) << ", sup*sqrt(eps) " << fmt(scaled[0]) << "/" << fmt(scaled[1]) << "/" << fmt(scaled[2])
           << ", L2 distances";
    for (double d : sel.distances) c.note << ' ' << fmt(d);
  }
  return {5, "mollifier", c.ok, c.note.str()};
}

pde::SolveResult hardy_solve(int refine) {
  const auto bn = mollifier::build_regularized_drift(FormBoundedDrift::hardy(3, kDelta), 4, 0.01);
  pde::SolveOptions o;
  o.t = 0.5;
  o.dt = 1e-3 / std::pow(4.0, refine);
  o.q = kQ;
  o.trace_every = 1 << (2 * refine);
  return pde::solve_radial(bn, pde::gaussian_initial(4.0), pde::RadialGrid{8.0, 1000 << refine, 3}, o);
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

Result pde_identity(const std::vector<pde::SolveResult>& runs) {
  Check c;
  for (const auto& r : runs) {
    c.expect(r.min_value >= 0.0, "positivity (min " + fmt(r.min_value) + ")");
    c.expect(r.max_value <= r.initial_max, "maximum principle");
    for (std::size_t k = 0; k < r.trace.size(); ++k) c.expect(r.trace.I_q[k] >= r.trace.J_q[k], "I_q >= J_q at step " + std::to_string(k));
  }
  const double a = max_of(runs[0].trace.identity_residual), b = max_of(runs[1].trace.identity_residual);
  const double order = std::log2(a / b);
  c.expect(order >= 1.0, "residual order " + fmt(order));
  if (c.ok) c.note << "max residual " << fmt(a) << " -> " << fmt(b) << ", order " << fmt(order) << " per halving of dr";
  return {6, "PDE identity", c.ok, c.note.str()};
}

Result gradient_bound(const std::vector<pde::SolveResult>& runs) {
  Check c;
  double worst = -1e300, incr = 0.0;
  for (const auto& r : runs) {
    const auto rep = pde::verify_gradient_bound(r.trace, kQ, kDelta, GClass::zero());
    c.expect(rep.monotonicity_violations.empty(), "gradient norm non-increasing within 1%");
    c.expect(rep.inequality_violations.empty(), "differential inequality (worst excess " + fmt(rep.worst_inequality_excess) + ")");
    worst = std::max(worst, rep.worst_inequality_excess);
    incr = std::max(incr, rep.max_relative_increase);
  }
  if (c.ok) c.note << "max relative increase " << fmt(incr) << ", worst (2/q)dN + kJ - tol " << fmt(worst);
  return {7, "gradient bound", c.ok, c.note.str()};
}

Result zero_drift_oracle() {
  Check c;
  auto exact = [](double r2, double t) { return std::pow(1 + 4 * t, -1.5) * std::exp(-r2 / (1 + 4 * t)); };
  std::vector<double> rad;
  for (int n : {400, 800}) {
    const pde::RadialGrid g{8.0, n, 3};
    pde::SolveOptions o;
    o.t = 0.1;
    o.dt = 0.5 * g.dr() * g.dr();
    o.functionals = false;
    const auto u = pde::solve_radial(FormBoundedDrift::zero(3), pde::gaussian_initial(7.0), g, o).snapshots.back().values;
    double e = 0;
    for (int i = 0; i <= n; ++i) e = std::max(e, std::abs(u[static_cast<std::size_t>(i)] - exact(g.r(i) * g.r(i), 0.1)));
    rad.push_back(e);
  }
  std::vector<double> cart;
  for (int n : {20, 40}) {
    const pde::CartesianGrid g{5.0, n, 3};
    pde::SolveOptions o;
    o.t = 0.1;
    o.dt = 0.1 * g.dx() * g.dx();
    o.functionals = false;
    const auto u = pde::solve_cartesian(FormBoundedDrift::zero(3),
                                        [](std::span<const double> x) { return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])); },
                                        g, o).snapshots.back().values;
    const int m = n + 1;
    double e = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
          const double x = -5 + g.dx() * i, y = -5 + g.dx() * j, z = -5 + g.dx() * k, r2 = x * x + y * y + z * z;
          if (r2 <= 4.0) e = std::max(e, std::abs(u[static_cast<std::size_t>((i * m + j) * m + k)] - exact(r2, 0.1)));
        }
    cart.push_back(e);
  }
  const double rr = rad[0] / rad[1], cr = cart[0] / cart[1];
  c.expect(rr >= 3.5 && rr <= 4.5, "radial refinement ratio " + fmt(rr));
  c.expect(cr >= 3.5 && cr <= 4.5, "Cartesian refinement ratio " + fmt(cr));
  const pde::RadialGrid g{8.0, 2000, 3};
  pde::SolutionField f{g, 0.0, {}};
  for (int i = 0; i <= g.n_r; ++i) f.values.push_back(i == g.n_r ? 0.0 : std::exp(-g.r(i) * g.r(i)));
  const double quad = std::pow(pde::grad_norms(f, Rational(4)).norm_q, 4);
  const double gamma_value = 15.0 * std::pow(std::numbers::pi, 1.5) / 32.0;
  c.expect(std::abs(quad / gamma_value - 1.0) <= 0.005, "gradient L4 quadrature " + fmt(quad));
  c.expect(std::abs(gamma_value - 2.6101) < 1e-4, "closed form 2.6101");
  if (c.ok) c.note << "ratios radial " << fmt(rr) << ", Cartesian " << fmt(cr) << "; ||grad e^{-|x|^2}||_4^4 = " << fmt(quad);
  return {8, "zero-drift oracle", c.ok, c.note.str()};
}

Result cauchy() {
  Check c;
  const auto tab = pde::approximation_cauchy_check(FormBoundedDrift::hardy(3, kDelta), pde::gaussian_initial(4.0),
                                                   pde::RadialGrid{8.0, 1000, 3}, {2, 3, 4, 5}, {0.04, 0.02, 0.01, 0.005},
                                                   pde::CauchyOptions{});
  c.expect(tab.decreasing_r, "L4 distances decrease");
  c.expect(tab.decreasing_inf, "sup distances decrease");
  c.note << (c.ok ? "" : "; ") << "L4";
  for (const auto& r : tab.rows) c.note << ' ' << fmt(r.dist_r);
  c.note << ", sup";
  for (const auto& r : tab.rows) c.note << ' ' << fmt(r.dist_inf);
  return {9, "Cauchy in n", c.ok, c.note.str()};
}

struct StochasticRun {
  std::vector<sde::WeakReport> weak;
  std::vector<sde::BlowupRow> blowup;
};

std::vector<sde::WeakReport> weak_runs(const Options& opt) {
  const sde::RadialFunction g{"gaussian", [](double r) { return std::exp(-r * r); }};
  sde::WeakCompareOptions o;
  o.n_paths = opt.sde_paths;
  o.seed = opt.seed;
  std::vector<sde::WeakReport> out;
  const std::vector<double> x0{1.0, 0.0, 0.0};
  out.push_back(sde::weak_compare(FormBoundedDrift::zero(3), g, x0, o));
  out.back().closed_form = sde::constant_drift_gaussian({0, 0, 0}, x0, o.T);
  out.push_back(sde::weak_compare(FormBoundedDrift::constant({0.5, 0.0, 0.0}), g, x0, o));
  out.back().closed_form = sde::constant_drift_gaussian({0.5, 0, 0}, x0, o.T);
  const auto bn = mollifier::build_regularized_drift(FormBoundedDrift::hardy(3, kDelta), 4, 0.01);
  out.push_back(sde::weak_compare(bn, g, x0, o));
  return out;
}

std::vector<sde::BlowupRow> blowup_runs(const Options& opt) {
  sde::BlowupOptions o;
  o.n_paths = opt.blowup_paths;
  o.seed = opt.seed;
  return sde::blowup_probe(3, {Rational(16), Rational(36), Rational(49)}, {0.05, 0.0, 0.0}, o);
}

Result weak_correspondence(const std::vector<sde::WeakReport>& w) {
  Check c;
  const char* names[] = {"zero drift", "constant drift", "mollified Hardy"};
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& r = w[i];
    if (i < 2) {
      // exact in law for these drifts: only the statistical band plus the PDE grid error
      c.expect(r.discrepancy <= 3 * r.se + r.pde_error, std::string(names[i]) + " within 3 SE of the PDE");
      c.expect(std::abs(r.mean - *r.closed_form) <= 3 * r.se, std::string(names[i]) + " within 3 SE of the closed form");
    } else {
      c.expect(r.pass, std::string(names[i]) + " within 3 SE + discretization estimate");
    }
    if (i) c.note << "; ";
    c.note << names[i] << " |mean-pde| " << fmt(r.discrepancy) << " vs band " << fmt(r.band);
  }
  return {10, "SDE/PDE weak correspondence", c.ok, c.note.str()};
}

Result blowup(const std::vector<sde::BlowupRow>& rows) {
  Check c;
  for (std::size_t i = 1; i < rows.size(); ++i)
    c.expect(rows[i].hit_fraction > rows[i - 1].hit_fraction, "hit fraction increases at delta " + format_rational(rows[i].delta));
  c.note << (c.ok ? "" : "; ") << "fractions";
  for (const auto& r : rows) c.note << ' ' << format_rational(r.delta) << ':' << fmt(r.hit_fraction);
  return {11, "blow-up probe", c.ok, c.note.str()};
}

bool same(const std::vector<sde::WeakReport>& a, const std::vector<sde::WeakReport>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].mean != b[i].mean || a[i].se != b[i].se || a[i].mean_coarse != b[i].mean_coarse || a[i].pde_value != b[i].pde_value)
      return false;
  return true;
}

bool same(const std::vector<sde::BlowupRow>& a, const std::vector<sde::BlowupRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].hit_fraction != b[i].hit_fraction) return false;
  return true;
}

}  // namespace

std::string format_line(const Result& r) {
  std::ostringstream s;
  s << "criterion " << std::setw(2) << r.id << " " << (r.pass ? "PASS" : "FAIL") << "  " << r.title << " [" << std::fixed
    << std::setprecision(1) << r.seconds << " s]: " << r.detail;
  return s.str();
}

std::vector<Result> run(const Options& opt, std::ostream& out) {
  auto wanted = [&](int id) { return opt.only.empty() || opt.only.count(id) != 0; };
  std::vector<Result> results;
  auto timed = [&](int id, const std::string& title, const std::function<Result()>& fn) {
    if (!wanted(id)) return;
    const auto t0 = Clock::now();
    Result r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = Result{id, title, false, std::string("exception: ") + e.what()};
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    out << format_line(r) << std::endl;
    results.push_back(r);
  };

  timed(1, "admissibility signs", admissibility_signs);
  timed(2, "constant comparison", constant_comparison);
  timed(3, "Moser schedule", moser_schedule);
  timed(4, "form bound", form_bound);
  timed(5, "mollifier", mollifier_checks);

  std::vector<pde::SolveResult> runs;
  auto ensure_runs = [&] {
    if (runs.empty()) runs = {hardy_solve(0), hardy_solve(1)};
  };
  timed(6, "PDE identity", [&] {
    ensure_runs();
    return pde_identity(runs);
  });
  timed(7, "gradient bound", [&] {
    ensure_runs();
    return gradient_bound(runs);
  });
  timed(8, "zero-drift oracle", zero_drift_oracle);
  timed(9, "Cauchy in n", cauchy);

  StochasticRun first;
  const bool need_weak = wanted(10) || wanted(12), need_blowup = wanted(11) || wanted(12);
  if (need_weak) {
    const auto t0 = Clock::now();
    try {
      first.weak = weak_runs(opt);
    } catch (const std::exception& e) {
      results.push_back(Result{10, "SDE/PDE weak correspondence", false, std::string("exception: ") + e.what()});
    }
    if (!first.weak.empty() && wanted(10)) {
      Result r = weak_correspondence(first.weak);
      r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      out << format_line(r) << std::endl;
      results.push_back(r);
    } else if (first.weak.empty()) {
      out << format_line(results.back()) << std::endl;
    }
  }
  if (need_blowup) {
    const auto t0 = Clock::now();
    first.blowup = blowup_runs(opt);
    if (wanted(11)) {
      Result r = blowup(first.blowup);
      r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      out << format_line(r) << std::endl;
      results.push_back(r);
    }
  }
  timed(12, "determinism", [&] {
    Check c;
    // a different worker count must not change a single bit
    const int jobs = job_limit().load();
    set_jobs(jobs == 1 ? 2 : 1);
    StochasticRun again{weak_runs(opt), blowup_runs(opt)};
    set_jobs(jobs);
    c.expect(same(first.weak, again.weak), "weak-comparison statistics identical on rerun");
    c.expect(same(first.blowup, again.blowup), "blow-up fractions identical on rerun");
    if (c.ok) c.note << "reran criteria 10 and 11 with a different worker count; statistics bit-identical";
    return Result{12, "determinism", c.ok, c.note.str()};
  });
  return results;
}

}  // namespace kolmo::acceptance

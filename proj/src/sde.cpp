#include "kolmo/sde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "kolmo/error.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/philox.hpp"

namespace kolmo::sde {

namespace {

constexpr std::size_t kMaxDim = 8;

std::size_t step_count(double T, double dt) {
  require(dt > 0.0 && T > 0.0, ErrorKind::domain, "need T > 0 and dt > 0");
  const double n = T / dt;
  const auto steps = static_cast<std::size_t>(std::llround(n));
  require(steps >= 1 && std::abs(n - static_cast<double>(steps)) < 1e-9 * n, ErrorKind::domain, "T must be a multiple of dt");
  return steps;
}

void check_spec(const EnsembleSpec& s) {
  require(!s.drift.singular(), ErrorKind::unbounded_drift, "Euler-Maruyama needs a bounded drift");
  require(s.n_paths >= 1, ErrorKind::domain, "n_paths must be positive");
  require(static_cast<int>(s.x0.size()) == s.drift.dim(), ErrorKind::domain, "x0 dimension differs from the drift");
  require(s.x0.size() <= kMaxDim, ErrorKind::domain, "dimension too large");
}

MeanEstimate summarize(const std::string& name, const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  const double n = static_cast<double>(v.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
  return MeanEstimate{name, mean, std::sqrt(var / n)};
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

EnsembleStats euler_maruyama(const EnsembleSpec& spec, const std::vector<Functional>& functionals,
                             const std::vector<HitTarget>& targets) {
  check_spec(spec);
  const std::size_t steps = step_count(spec.T, spec.dt);
  const std::size_t d = spec.x0.size(), np = spec.n_paths, nf = functionals.size(), nt = targets.size();
  const double sq = std::sqrt(2.0 * spec.dt);
  std::vector<double> values(np * nf), final_pos(np * d);
  std::vector<unsigned char> hits(np * nt, 0);

  parallel_for(np, [&](std::size_t p) {
    std::array<double, kMaxDim> x{}, b{}, xi{};
    std::copy(spec.x0.begin(), spec.x0.end(), x.begin());
    const std::span<double> xs(x.data(), d), bs(b.data(), d), xis(xi.data(), d);
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = spec.dt * static_cast<double>(k);
      const double f = spec.drift.time_factor(t);
      spec.drift.eval_spatial_into(xs, bs);
      path_normals(spec.seed, p, k, xis);
      for (std::size_t i = 0; i < d; ++i) x[i] += -f * b[i] * spec.dt + sq * xi[i];
      if (nt > 0) {
        const double r = norm(xs), tn = t + spec.dt;
        for (std::size_t j = 0; j < nt; ++j)
          if (r <= targets[j].radius && tn <= targets[j].horizon * (1 + 1e-12)) hits[p * nt + j] = 1;
      }
    }
    for (std::size_t j = 0; j < nf; ++j) values[p * nf + j] = functionals[j].f(xs);
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(d), final_pos.begin() + static_cast<std::ptrdiff_t>(p * d));
  });

  EnsembleStats st;
  st.n_paths = np;
  st.T = spec.T;
  st.dt = spec.dt;
  std::vector<double> col(np);
  for (std::size_t j = 0; j < nf; ++j) {
    for (std::size_t p = 0; p < np; ++p) col[p] = values[p * nf + j];
    st.means.push_back(summarize(functionals[j].name, col));
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t p = 0; p < np; ++p) col[p] = final_pos[p * d + i];
    const auto m = summarize("x", col);
    st.position_mean.push_back(m.mean);
    st.position_variance.push_back(m.se * m.se * static_cast<double>(np));
  }
  for (std::size_t j = 0; j < nt; ++j) {
    std::size_t c = 0;
    for (std::size_t p = 0; p < np; ++p) c += hits[p * nt + j];
    st.hit_fractions.push_back(static_cast<double>(c) / static_cast<double>(np));
  }
  return st;
}

RichardsonPair euler_maruyama_pair(const EnsembleSpec& spec, const Functional& fn) {
  check_spec(spec);
  const std::size_t steps = step_count(spec.T, spec.dt);
  const std::size_t d = spec.x0.size(), np = spec.n_paths;
  const double h = 0.5 * spec.dt;
  std::vector<double> coarse(np), fine(np);

  parallel_for(np, [&](std::size_t p) {
    std::array<double, kMaxDim> xc{}, xf{}, b{}, xi1{}, xi2{};
    std::copy(spec.x0.begin(), spec.x0.end(), xc.begin());
    std::copy(spec.x0.begin(), spec.x0.end(), xf.begin());
    const std::span<double> cs(xc.data(), d), fs(xf.data(), d), bs(b.data(), d);
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = spec.dt * static_cast<double>(k);
      path_normals(spec.seed, p, 2 * k, std::span<double>(xi1.data(), d));
      path_normals(spec.seed, p, 2 * k + 1, std::span<double>(xi2.data(), d));

      double f = spec.drift.time_factor(t);
      spec.drift.eval_spatial_into(cs, bs);
      for (std::size_t i = 0; i < d; ++i) xc[i] += -f * b[i] * spec.dt + std::sqrt(2.0 * spec.dt) * (xi1[i] + xi2[i]) / std::sqrt(2.0);

      spec.drift.eval_spatial_into(fs, bs);
      for (std::size_t i = 0; i < d; ++i) xf[i] += -f * b[i] * h + std::sqrt(2.0 * h) * xi1[i];
      f = spec.drift.time_factor(t + h);
      spec.drift.eval_spatial_into(fs, bs);
      for (std::size_t i = 0; i < d; ++i) xf[i] += -f * b[i] * h + std::sqrt(2.0 * h) * xi2[i];
    }
    coarse[p] = fn.f(cs);
    fine[p] = fn.f(fs);
  });

  RichardsonPair out;
  out.coarse = summarize(fn.name, coarse);
  out.fine = summarize(fn.name, fine);
  std::vector<double> diff(np);
  for (std::size_t p = 0; p < np; ++p) diff[p] = fine[p] - coarse[p];
  const auto dm = summarize(fn.name, diff);
  out.difference = dm.mean;
  out.difference_se = dm.se;
  return out;
}

namespace {

double radial_value(const pde::SolutionField& s, double r) {
  const auto& g = std::get<pde::RadialGrid>(s.grid);
  const double x = r / g.dr();
  const auto i = static_cast<std::size_t>(std::floor(x));
  if (i >= static_cast<std::size_t>(g.n_r)) return 0.0;
  const double w = x - static_cast<double>(i);
  return (1.0 - w) * s.values[i] + w * s.values[i + 1];
}

double cartesian_value(const pde::SolutionField& s, const std::vector<double>& x0) {
  const auto& g = std::get<pde::CartesianGrid>(s.grid);
  const int d = g.d, m = g.n + 1;
  std::array<int, 3> base{};
  std::array<double, 3> frac{};
  for (int k = 0; k < d; ++k) {
    const double u = (x0[static_cast<std::size_t>(k)] + g.half_width) / g.dx();
    require(u >= 0.0 && u < g.n, ErrorKind::domain, "x0 lies outside the PDE box");
    base[static_cast<std::size_t>(k)] = static_cast<int>(std::floor(u));
    frac[static_cast<std::size_t>(k)] = u - base[static_cast<std::size_t>(k)];
  }
  double v = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int k = 0; k < d; ++k) {
      const int bit = (corner >> k) & 1;
      w *= bit ? frac[static_cast<std::size_t>(k)] : 1.0 - frac[static_cast<std::size_t>(k)];
      flat = flat * static_cast<std::size_t>(m) + static_cast<std::size_t>(base[static_cast<std::size_t>(k)] + bit);
    }
    v += w * s.values[flat];
  }
  return v;
}

}  // namespace

WeakReport weak_compare(const FormBoundedDrift& drift, const RadialFunction& f, const std::vector<double>& x0,
                        const WeakCompareOptions& opt) {
  require(!drift.singular(), ErrorKind::unbounded_drift, "weak comparison needs a bounded drift");
  WeakReport rep;
  rep.functional = f.name;
  rep.drift = drift.describe();
  rep.x0 = x0;
  rep.T = opt.T;
  rep.dt = opt.dt;
  rep.n_paths = opt.n_paths;

  EnsembleSpec spec{drift, x0, opt.T, opt.dt, opt.n_paths, opt.seed};
  const auto pair = euler_maruyama_pair(spec, Functional{f.name, [&](std::span<const double> x) { return f.profile(norm(x)); }});
  rep.mean = pair.fine.mean;
  rep.se = pair.fine.se;
  rep.mean_coarse = pair.coarse.mean;
  rep.richardson = std::abs(pair.difference);

  const FormBoundedDrift reversed = drift.time_reversed(opt.T);
  pde::SolveOptions so;
  so.t = opt.T;
  so.functionals = false;
  double coarse_value, fine_value;
  if (drift.radial()) {
    require(opt.radial.d == drift.dim(), ErrorKind::domain, "radial grid dimension differs from the drift");
    const double r0 = norm(x0);
    pde::RadialGrid gc = opt.radial;
    gc.n_r = opt.radial.n_r / 2;
    so.dt = opt.pde_dt;
    coarse_value = radial_value(pde::solve_radial(reversed, f.profile, gc, so).snapshots.back(), r0);
    so.dt = opt.pde_dt / 4.0;
    fine_value = radial_value(pde::solve_radial(reversed, f.profile, opt.radial, so).snapshots.back(), r0);
  } else {
    const auto field = [&](std::span<const double> x) { return f.profile(norm(x)); };
    pde::CartesianGrid gf = opt.cartesian;
    gf.n = 2 * opt.cartesian.n;
    so.dt = 0.9 * pde::cartesian_step_bound(reversed, opt.cartesian);
    coarse_value = cartesian_value(pde::solve_cartesian(reversed, field, opt.cartesian, so).snapshots.back(), x0);
    so.dt = 0.9 * pde::cartesian_step_bound(reversed, gf);
    fine_value = cartesian_value(pde::solve_cartesian(reversed, field, gf, so).snapshots.back(), x0);
  }
  rep.pde_value = fine_value;
  rep.pde_error = std::abs(fine_value - coarse_value);
  rep.discretization_estimate = rep.richardson + rep.pde_error;
  rep.discrepancy = std::abs(rep.mean - rep.pde_value);
  rep.band = 3.0 * rep.se + rep.discretization_estimate;
  rep.pass = rep.discrepancy <= rep.band;
  return rep;
}

nlohmann::json to_json(const WeakReport& r) {
  nlohmann::json j;
  j["functional"] = r.functional;
  j["drift"] = r.drift;
  j["x0"] = r.x0;
  j["T"] = r.T;
  j["dt"] = r.dt;
  j["n_paths"] = r.n_paths;
  j["mean"] = r.mean;
  j["se"] = r.se;
  j["mean_dt"] = r.mean_coarse;
  j["pde_value"] = r.pde_value;
  j["pde_grid_error"] = r.pde_error;
  j["richardson"] = r.richardson;
  j["discretization_estimate"] = r.discretization_estimate;
  j["discrepancy"] = r.discrepancy;
  j["band"] = r.band;
  if (r.closed_form) j["closed_form"] = *r.closed_form;
  j["verdict"] = r.pass ? "pass" : "fail";
  return j;
}

double constant_drift_gaussian(const std::vector<double>& c, const std::vector<double>& x0, double T, double a) {
  require(c.size() == x0.size(), ErrorKind::domain, "dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += (x0[i] - c[i] * T) * (x0[i] - c[i] * T);
  return std::pow(a / (a + 4.0 * T), 0.5 * static_cast<double>(c.size())) * std::exp(-s / (a + 4.0 * T));
}

std::vector<BlowupRow> blowup_probe(int d, const std::vector<Rational>& deltas, const std::vector<double>& x0,
                                    const BlowupOptions& opt) {
  require(d >= 3 && static_cast<std::size_t>(d) <= kMaxDim, ErrorKind::domain, "blowup probe needs 3 <= d <= 8");
  require(static_cast<int>(x0.size()) == d, ErrorKind::domain, "x0 dimension differs from d");
  require(norm(x0) > opt.rho, ErrorKind::domain, "x0 must lie outside the target ball");
  require(opt.rho > 0 && opt.T > 0 && opt.dt > 0 && opt.n_paths >= 1, ErrorKind::domain, "need rho, T, dt > 0 and n_paths >= 1");
  const auto du = static_cast<std::size_t>(d);
  std::vector<BlowupRow> rows;
  for (const auto& delta : deltas) {
    require(delta >= 0, ErrorKind::domain, "delta must be nonnegative");
    const double c = hardy_coefficient(d, delta);
    std::vector<unsigned char> hit(opt.n_paths, 0);
    parallel_for(opt.n_paths, [&](std::size_t p) {
      std::array<double, kMaxDim> x{}, xi{};
      std::copy(x0.begin(), x0.end(), x.begin());
      double t = 0.0;
      for (std::uint64_t k = 0; t < opt.T; ++k) {
        const double r = norm(std::span<const double>(x.data(), du));
        if (r <= opt.rho) {
          hit[p] = 1;
          return;
        }
        const double h = std::min({opt.dt, 0.01 * r * r, opt.T - t});
        const double mag = std::min(c / r, 1.0 / std::sqrt(h));
        path_normals(opt.seed, p, k, std::span<double>(xi.data(), du));
        const double sq = std::sqrt(2.0 * h);
        for (std::size_t i = 0; i < du; ++i) x[i] += -mag * x[i] / r * h + sq * xi[i];
        t += h;
      }
      if (norm(std::span<const double>(x.data(), du)) <= opt.rho) hit[p] = 1;
    });
    std::size_t count = 0;
    for (unsigned char v : hit) count += v;
    rows.push_back(BlowupRow{delta, static_cast<double>(count) / static_cast<double>(opt.n_paths), opt.n_paths, opt.dt});
  }
  return rows;
}

void write_blowup_csv(std::ostream& out, const std::vector<BlowupRow>& rows) {
  out << "delta,hit_fraction,n_paths,dt\n" << std::setprecision(17);
  for (const auto& r : rows) out << format_rational(r.delta) << ',' << r.hit_fraction << ',' << r.n_paths << ',' << r.dt << '\n';
}

}  // namespace kolmo::sde

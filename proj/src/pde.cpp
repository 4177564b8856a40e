#include "kolmo/pde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "kolmo/admissibility.hpp"
#include "kolmo/error.hpp"
#include "kolmo/mollifier.hpp"
#include "kolmo/parallel.hpp"

namespace kolmo::pde {

namespace {

double sphere_area(int m) {
  const double k = 0.5 * (m + 1);
  return 2.0 * std::pow(std::numbers::pi, k) / boost::math::tgamma(k);
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

// Thomas algorithm; a is the sub-diagonal (a[0] unused), c the super-diagonal.
void solve_tridiagonal(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c,
                       std::vector<double>& rhs, std::vector<double>& scratch) {
  const std::size_t n = b.size();
  scratch.resize(n);
  scratch[0] = c[0] / b[0];
  rhs[0] /= b[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double m = b[i] - a[i] * scratch[i - 1];
    scratch[i] = c[i] / m;
    rhs[i] = (rhs[i] - a[i] * rhs[i - 1]) / m;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

// Radial operator: finite-volume Laplacian in dimension D plus advection by the
// smooth part of beta. Unknowns are nodes 0..N-1; node N is the Dirichlet wall.
struct RadialOperator {
  int N = 0;
  double dr = 0.0;
  std::vector<double> diff_lo, diff_up;  // diffusion couplings
  std::vector<double> beta;              // smooth beta at nodes, without the time factor

  RadialOperator(const RadialGrid& g, double D, const RadialProfile& prof) : N(g.n_r), dr(g.dr()) {
    diff_lo.assign(static_cast<std::size_t>(N), 0.0);
    diff_up.assign(static_cast<std::size_t>(N), 0.0);
    beta.assign(static_cast<std::size_t>(N + 1), 0.0);
    auto area = [&](double r) { return std::pow(r, D - 1.0); };
    for (int i = 0; i < N; ++i) {
      const double rp = (i + 0.5) * dr;
      if (i == 0) {
        const double vol = std::pow(rp, D) / D;
        diff_up[0] = area(rp) / (dr * vol);
      } else {
        const double rm = (i - 0.5) * dr;
        const double vol = (std::pow(rp, D) - std::pow(rm, D)) / D;
        diff_lo[static_cast<std::size_t>(i)] = area(rm) / (dr * vol);
        diff_up[static_cast<std::size_t>(i)] = area(rp) / (dr * vol);
      }
    }
    if (prof.table)
      for (int i = 1; i <= N; ++i) beta[static_cast<std::size_t>(i)] = (*prof.table)(i * dr);
  }

  // Couplings of row i at time factor f, advection centred where that keeps
  // them nonnegative and upwinded otherwise (or always when upwind is set).
  void couplings(int i, double f, bool centred_allowed, double& lo, double& up) const {
    const auto k = static_cast<std::size_t>(i);
    lo = diff_lo[k];
    up = diff_up[k];
    if (i == 0) return;
    const double b = f * beta[k];
    if (b == 0.0) return;
    const double half = b / (2.0 * dr);
    if (centred_allowed && lo + half >= 0.0 && up - half >= 0.0) {
      lo += half;
      up -= half;
    } else if (b > 0.0) {
      lo += b / dr;
    } else {
      up -= b / dr;
    }
  }

  double max_beta() const {
    double m = 0.0;
    for (double b : beta) m = std::max(m, std::abs(b));
    return m;
  }

  // y = L u for the full operator at factor f.
  void apply(const std::vector<double>& u, double f, bool centred, std::vector<double>& y) const {
    y.assign(u.size(), 0.0);
    for (int i = 0; i < N; ++i) {
      double lo, up;
      couplings(i, f, centred, lo, up);
      const auto k = static_cast<std::size_t>(i);
      const double um = i > 0 ? u[k - 1] : 0.0;
      y[k] = lo * (um - u[k]) + up * (u[k + 1] - u[k]);
    }
  }
};

struct Bounds {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(const std::vector<double>& u) {
    for (double v : u) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
};

Functionals radial_functionals(const RadialGrid& g, const std::vector<double>& u, const RadialProfile& prof, double tau,
                               double q) {
  const int d = g.d, N = g.n_r;
  const double dr = g.dr();
  const double sigma = sphere_area(d - 1);
  const double j = static_cast<double>(d) / (d - 2);
  const double kappa = prof.hardy_coefficient;
  Functionals out;
  double qj_sum = 0.0;
  for (int i = 1; i <= N; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double r = i * dr;
    const double up = i < N ? u[k + 1] : 0.0;
    const double w = i < N ? (up - u[k - 1]) / (2.0 * dr) : (u[k] - u[k - 1]) / dr;
    const double urr = i < N ? (up - 2.0 * u[k] + u[k - 1]) / (dr * dr) : 0.0;
    const double weight = sigma * std::pow(r, d - 1) * (i == N ? 0.5 * dr : dr);
    const double aw = std::abs(w);
    const double pw = std::pow(aw, q - 2.0);
    const double beta = prof(tau, r);
    const double wr = w / r;
    out.N += weight * pw * aw * aw;
    qj_sum += weight * std::pow(aw, q * j);
    out.I += weight * (urr * urr + (d - 1) * wr * wr) * pw;
    out.J += weight * urr * urr * pw;
    out.B += weight * beta * beta * pw * aw * aw;
    out.X += weight * beta * w * ((q - 1.0) * pw * urr + (d - 1) * pw * wr);
    const double ut = urr + ((d - 1) / r - beta) * w;
    out.dt_term += weight * ut * ut * pw;
  }
  (void)kappa;
  out.identity_residual = std::pow(qj_sum, 1.0 / j);  // stash ||w||_{qj}^q; caller moves it
  return out;
}

}  // namespace

std::size_t CartesianGrid::points() const {
  std::size_t p = 1;
  for (int k = 0; k < d; ++k) p *= static_cast<std::size_t>(n + 1);
  return p;
}

const char* to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::implicit: return "implicit";
    case Scheme::imex: return "imex";
    case Scheme::crank_nicolson: return "crank_nicolson";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "implicit") return Scheme::implicit;
  if (name == "imex") return Scheme::imex;
  if (name == "crank_nicolson" || name == "cn") return Scheme::crank_nicolson;
  raise(ErrorKind::validation, "unknown scheme '" + name + "'");
}

void NormTrace::compute_residual() {
  const std::size_t n = times.size();
  identity_residual.assign(n, 0.0);
  if (n < 2) return;
  const double qd = to_double(q);
  for (std::size_t k = 0; k < n; ++k) {
    const double dN = time_derivative(times, grad_q_pow, k);
    identity_residual[k] = std::abs(dN / qd + I_q[k] + (qd - 2.0) * J_q[k] - X_q[k]);
  }
}

// Three-point derivative: centred inside, one-sided second order at the ends.
double time_derivative(const std::vector<double>& t, const std::vector<double>& y, std::size_t k) {
  const std::size_t n = t.size();
  if (n == 2) return (y[1] - y[0]) / (t[1] - t[0]);
  std::size_t i0 = k == 0 ? 0 : (k + 1 == n ? n - 3 : k - 1);
  const double x0 = t[i0], x1 = t[i0 + 1], x2 = t[i0 + 2], x = t[k];
  const double l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
  const double l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
  const double l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
  return l0 * y[i0] + l1 * y[i0 + 1] + l2 * y[i0 + 2];
}

RadialData gaussian_initial(double cutoff_radius) {
  return [cutoff_radius](double r) {
    const double c = smoothstep((cutoff_radius - r) / (0.1 * cutoff_radius));
    return c == 0.0 ? 0.0 : std::exp(-r * r) * c;
  };
}

namespace {

void record(NormTrace& trace, double tau, const std::vector<double>& u, const Functionals& f, double qd) {
  trace.times.push_back(tau);
  double sup = 0.0;
  for (double v : u) sup = std::max(sup, std::abs(v));
  trace.sup_norm.push_back(sup);
  trace.grad_q_pow.push_back(f.N);
  trace.grad_q.push_back(std::pow(f.N, 1.0 / qd));
  trace.grad_qj_pow.push_back(f.identity_residual);
  trace.I_q.push_back(f.I);
  trace.J_q.push_back(f.J);
  trace.B_q.push_back(f.B);
  trace.X_q.push_back(f.X);
  trace.dt_term.push_back(f.dt_term);
}

bool snapshot_due(const std::vector<double>& times, double tau, double dt) {
  return std::any_of(times.begin(), times.end(), [&](double t) { return std::abs(t - tau) < 0.5 * dt; });
}

}  // namespace

SolveResult solve_radial(const FormBoundedDrift& drift, const RadialData& h, const RadialGrid& grid, const SolveOptions& opt) {
  require(grid.d >= 3, ErrorKind::domain, "radial solves need d >= 3");
  require(grid.d == drift.dim(), ErrorKind::domain, "grid and drift dimensions differ");
  require(grid.n_r >= 4 && grid.r_max > 0, ErrorKind::domain, "radial grid needs n_r >= 4 and r_max > 0");
  require(opt.dt > 0 && opt.t > opt.s, ErrorKind::domain, "need dt > 0 and t > s");
  require(opt.q > 2, ErrorKind::domain, "q must exceed 2");
  const RadialProfile prof = drift.radial_profile();
  const double D = grid.d - prof.hardy_coefficient;
  require(D > 0.0, ErrorKind::stability, "effective dimension d - kappa must be positive");
  const RadialOperator op(grid, D, prof);
  const double dt0 = opt.dt;
  if (opt.scheme == Scheme::imex && op.max_beta() > 0.0)
    require(dt0 <= 0.5 * op.dr / op.max_beta() * (1 + 1e-12), ErrorKind::stability,
            "imex step exceeds dr/(2 max|beta|)");

  const int N = grid.n_r;
  const double qd = to_double(opt.q);
  std::vector<double> u(static_cast<std::size_t>(N + 1), 0.0);
  for (int i = 0; i < N; ++i) u[static_cast<std::size_t>(i)] = h(grid.r(i));

  SolveResult res;
  res.trace.q = opt.q;
  res.trace.d = grid.d;
  Bounds bounds;
  bounds.add(u);
  res.initial_min = bounds.lo;
  res.initial_max = bounds.hi;
  const double sigma = sphere_area(grid.d - 1);
  for (int i = 0; i <= N; ++i)
    res.initial_mass += sigma * std::pow(grid.r(i), grid.d - 1) * grid.dr() * (i == N ? 0.5 : 1.0) * std::abs(u[static_cast<std::size_t>(i)]);

  auto snap = [&](double tau) { res.snapshots.push_back(SolutionField{grid, tau, u}); };
  auto trace = [&](double tau) {
    if (opt.functionals) record(res.trace, tau, u, radial_functionals(grid, u, prof, tau, qd), qd);
  };
  const std::size_t steps = static_cast<std::size_t>(std::llround((opt.t - opt.s) / dt0));
  require(steps >= 1, ErrorKind::domain, "time span shorter than one step");
  const double dt = (opt.t - opt.s) / static_cast<double>(steps);
  if (opt.snapshot_times.empty() || snapshot_due(opt.snapshot_times, opt.s, dt)) snap(opt.s);
  trace(opt.s);

  const auto n = static_cast<std::size_t>(N);
  std::vector<double> a(n), b(n), c(n), rhs(n), scratch, Lu;
  const bool centred = opt.scheme != Scheme::imex;
  const double r_wall = grid.r_max - 0.5 * grid.dr();
  for (std::size_t step = 1; step <= steps; ++step) {
    const double t_old = opt.s + dt * static_cast<double>(step - 1);
    const double t_new = opt.s + dt * static_cast<double>(step);
    const double f_new = drift.time_factor(t_new);
    const double f_old = drift.time_factor(t_old);
    std::copy(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(n), rhs.begin());
    double theta = 1.0;
    if (opt.scheme == Scheme::crank_nicolson) {
      theta = 0.5;
      op.apply(u, f_old, true, Lu);
      for (std::size_t i = 0; i < n; ++i) rhs[i] += 0.5 * dt * Lu[i];
    } else if (opt.scheme == Scheme::imex) {
      // explicit upwind advection at the old time
      for (int i = 1; i < N; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double bb = f_old * op.beta[k];
        const double ur = bb > 0 ? (u[k] - u[k - 1]) / op.dr : (u[k + 1] - u[k]) / op.dr;
        rhs[k] -= dt * bb * ur;
      }
    }
    for (int i = 0; i < N; ++i) {
      const auto k = static_cast<std::size_t>(i);
      double lo, up;
      if (opt.scheme == Scheme::imex) {
        lo = op.diff_lo[k];
        up = op.diff_up[k];
      } else {
        op.couplings(i, f_new, centred, lo, up);
      }
      a[k] = -theta * dt * lo;
      c[k] = -theta * dt * up;
      b[k] = 1.0 + theta * dt * (lo + up);
    }
    c[n - 1] = 0.0;  // wall value is zero
    solve_tridiagonal(a, b, c, rhs, scratch);
    std::copy(rhs.begin(), rhs.end(), u.begin());
    u[n] = 0.0;
    bounds.add(u);

    res.boundary_outflow += dt * sigma * std::pow(r_wall, grid.d - 1) * std::abs(u[n - 1]) / grid.dr();
    if (res.boundary_outflow > opt.flux_tolerance * res.initial_mass)
      raise(ErrorKind::boundary_flux, "boundary outflow exceeded " + std::to_string(opt.flux_tolerance) +
                                          " of the initial mass at tau = " + std::to_string(t_new) + "; enlarge r_max");
    if (step % static_cast<std::size_t>(std::max(1, opt.trace_every)) == 0 || step == steps) trace(t_new);
    if (snapshot_due(opt.snapshot_times, t_new, dt) || (opt.snapshot_times.empty() && step == steps)) snap(t_new);
  }
  res.steps = steps;
  res.min_value = bounds.lo;
  res.max_value = bounds.hi;
  if (opt.functionals) res.trace.compute_residual();
  return res;
}

// ---------------------------------------------------------------- Cartesian

namespace {

struct CartesianLayout {
  int d = 3, m = 0;  // m = n + 1 nodes per axis
  std::array<std::size_t, 3> stride{};
  std::size_t total = 0;
  explicit CartesianLayout(const CartesianGrid& g) : d(g.d), m(g.n + 1) {
    std::size_t s = 1;
    for (int k = d - 1; k >= 0; --k) {
      stride[static_cast<std::size_t>(k)] = s;
      s *= static_cast<std::size_t>(m);
    }
    total = s;
  }
  void index(std::size_t flat, std::array<int, 3>& idx) const {
    for (int k = 0; k < d; ++k) {
      idx[static_cast<std::size_t>(k)] = static_cast<int>((flat / stride[static_cast<std::size_t>(k)]) % static_cast<std::size_t>(m));
    }
  }
  bool interior(const std::array<int, 3>& idx) const {
    for (int k = 0; k < d; ++k)
      if (idx[static_cast<std::size_t>(k)] == 0 || idx[static_cast<std::size_t>(k)] == m - 1) return false;
    return true;
  }
};

Functionals cartesian_functionals(const CartesianGrid& g, const std::vector<double>& u, const std::vector<double>& bfield,
                                  double factor, double q) {
  const CartesianLayout L(g);
  const int d = g.d;
  const double h = g.dx();
  const double cell = std::pow(h, d);
  const double j = static_cast<double>(d) / (d - 2);
  Functionals out;
  double qj_sum = 0.0;
  for (std::size_t i = 0; i < L.total; ++i) {
    std::array<int, 3> idx{};
    L.index(i, idx);
    if (!L.interior(idx)) continue;
    std::array<double, 3> w{}, b{};
    std::array<std::array<double, 3>, 3> H{};
    double lap = 0.0;
    for (int k = 0; k < d; ++k) {
      const std::size_t sk = L.stride[static_cast<std::size_t>(k)];
      w[static_cast<std::size_t>(k)] = (u[i + sk] - u[i - sk]) / (2.0 * h);
      H[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] = (u[i + sk] - 2.0 * u[i] + u[i - sk]) / (h * h);
      lap += H[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
      b[static_cast<std::size_t>(k)] = factor * bfield[static_cast<std::size_t>(k) * L.total + i];
      for (int l = 0; l < k; ++l) {
        const std::size_t sl = L.stride[static_cast<std::size_t>(l)];
        const double v = (u[i + sk + sl] - u[i + sk - sl] - u[i - sk + sl] + u[i - sk - sl]) / (4.0 * h * h);
        H[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = H[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] = v;
      }
    }
    double w2 = 0.0, bw = 0.0, H2 = 0.0, wHw = 0.0, Hw2 = 0.0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(d); ++k) {
      w2 += w[k] * w[k];
      bw += b[k] * w[k];
      double hk = 0.0;
      for (std::size_t l = 0; l < static_cast<std::size_t>(d); ++l) {
        H2 += H[k][l] * H[k][l];
        hk += H[k][l] * w[l];
      }
      wHw += w[k] * hk;
      Hw2 += hk * hk;
    }
    const double aw = std::sqrt(w2);
    const double pw = std::pow(aw, q - 2.0);
    out.N += cell * pw * w2;
    qj_sum += cell * std::pow(aw, q * j);
    out.I += cell * H2 * pw;
    if (w2 > 0.0) {
      out.J += cell * (Hw2 / w2) * pw;
      out.X += cell * bw * (pw * lap + (q - 2.0) * pw * wHw / w2);
    }
    out.B += cell * bw * bw * pw;
    const double ut = lap - bw;
    out.dt_term += cell * ut * ut * pw;
  }
  out.identity_residual = std::pow(qj_sum, 1.0 / j);
  return out;
}

}  // namespace

double cartesian_step_bound(const FormBoundedDrift& drift, const CartesianGrid& grid) {
  require(!drift.singular(), ErrorKind::unbounded_drift, "Cartesian solves need a bounded drift");
  const double h = grid.dx();
  const double sup = drift.sup_norm();
  return 1.0 / (2.0 * grid.d / (h * h) + grid.d * sup / h);
}

SolveResult solve_cartesian(const FormBoundedDrift& drift, const FieldData& h, const CartesianGrid& grid, const SolveOptions& opt) {
  require(!drift.singular(), ErrorKind::unbounded_drift, "Cartesian solves need a bounded drift");
  require(grid.d == 2 || grid.d == 3, ErrorKind::domain, "Cartesian solves are 2D or 3D");
  require(grid.d == drift.dim(), ErrorKind::domain, "grid and drift dimensions differ");
  require(grid.n >= 4 && grid.half_width > 0, ErrorKind::domain, "Cartesian grid needs n >= 4");
  require(opt.dt > 0 && opt.t > opt.s, ErrorKind::domain, "need dt > 0 and t > s");
  require(opt.q > 2 && grid.d > 2, ErrorKind::domain, "q must exceed 2 and d must exceed 2 for the trace");
  const double bound = cartesian_step_bound(drift, grid);
  const std::size_t steps = static_cast<std::size_t>(std::ceil((opt.t - opt.s) / opt.dt - 1e-9));
  const double dt = (opt.t - opt.s) / static_cast<double>(steps);
  require(dt <= bound * (1 + 1e-12), ErrorKind::stability,
          "explicit step " + std::to_string(dt) + " exceeds the monotone bound " + std::to_string(bound));

  const CartesianLayout L(grid);
  const int d = grid.d;
  const double hx = grid.dx();
  const double qd = to_double(opt.q);
  std::vector<double> u(L.total, 0.0), next(L.total, 0.0);
  std::vector<double> bfield(L.total * static_cast<std::size_t>(d), 0.0);
  for (std::size_t i = 0; i < L.total; ++i) {
    std::array<int, 3> idx{};
    L.index(i, idx);
    std::array<double, 3> x{}, b{};
    for (int k = 0; k < d; ++k) x[static_cast<std::size_t>(k)] = -grid.half_width + hx * idx[static_cast<std::size_t>(k)];
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(d));
    drift.eval_spatial_into(xs, std::span<double>(b.data(), static_cast<std::size_t>(d)));
    for (int k = 0; k < d; ++k) bfield[static_cast<std::size_t>(k) * L.total + i] = b[static_cast<std::size_t>(k)];
    if (L.interior(idx)) u[i] = h(xs);
  }

  SolveResult res;
  res.trace.q = opt.q;
  res.trace.d = d;
  Bounds bounds;
  bounds.add(u);
  res.initial_min = bounds.lo;
  res.initial_max = bounds.hi;
  for (double v : u) res.initial_mass += std::abs(v) * std::pow(hx, d);

  auto snap = [&](double tau) { res.snapshots.push_back(SolutionField{grid, tau, u}); };
  auto trace = [&](double tau) {
    if (opt.functionals) record(res.trace, tau, u, cartesian_functionals(grid, u, bfield, drift.time_factor(tau), qd), qd);
  };
  if (opt.snapshot_times.empty() || snapshot_due(opt.snapshot_times, opt.s, dt)) snap(opt.s);
  trace(opt.s);

  for (std::size_t step = 1; step <= steps; ++step) {
    const double t_old = opt.s + dt * static_cast<double>(step - 1);
    const double t_new = opt.s + dt * static_cast<double>(step);
    const double f = drift.time_factor(t_old);
    parallel_for(L.total, [&](std::size_t i) {
      std::array<int, 3> idx{};
      L.index(i, idx);
      if (!L.interior(idx)) {
        next[i] = 0.0;
        return;
      }
      double acc = 0.0;
      for (int k = 0; k < d; ++k) {
        const std::size_t sk = L.stride[static_cast<std::size_t>(k)];
        const double up = u[i + sk], dn = u[i - sk];
        acc += (up - 2.0 * u[i] + dn) / (hx * hx);
        const double bk = f * bfield[static_cast<std::size_t>(k) * L.total + i];
        if (std::abs(bk) * hx <= 2.0) acc -= bk * (up - dn) / (2.0 * hx);
        else if (bk > 0) acc -= bk * (u[i] - dn) / hx;
        else acc -= bk * (up - u[i]) / hx;
      }
      next[i] = u[i] + dt * acc;
    });
    std::swap(u, next);
    bounds.add(u);
    // outflow through the faces: flux into the wall nodes from their interior neighbours
    double out = 0.0;
    for (std::size_t i = 0; i < L.total; ++i) {
      std::array<int, 3> idx{};
      L.index(i, idx);
      for (int k = 0; k < d; ++k) {
        const int ik = idx[static_cast<std::size_t>(k)];
        if (ik == 1 || ik == L.m - 2) {
          bool inner = true;
          for (int l = 0; l < d; ++l)
            if (l != k && (idx[static_cast<std::size_t>(l)] == 0 || idx[static_cast<std::size_t>(l)] == L.m - 1)) inner = false;
          if (inner) out += std::abs(u[i]) / hx * std::pow(hx, d - 1);
        }
      }
    }
    res.boundary_outflow += dt * out;
    if (res.boundary_outflow > opt.flux_tolerance * res.initial_mass)
      raise(ErrorKind::boundary_flux, "boundary outflow exceeded " + std::to_string(opt.flux_tolerance) +
                                          " of the initial mass at tau = " + std::to_string(t_new) + "; enlarge the box");
    if (step % static_cast<std::size_t>(std::max(1, opt.trace_every)) == 0 || step == steps) trace(t_new);
    if (snapshot_due(opt.snapshot_times, t_new, dt) || (opt.snapshot_times.empty() && step == steps)) snap(t_new);
  }
  res.steps = steps;
  res.min_value = bounds.lo;
  res.max_value = bounds.hi;
  if (opt.functionals) res.trace.compute_residual();
  return res;
}

GradNorms grad_norms(const SolutionField& field, const Rational& q) {
  require(q > 2, ErrorKind::domain, "q must exceed 2");
  const double qd = to_double(q);
  Functionals f;
  int d;
  if (const auto* g = std::get_if<RadialGrid>(&field.grid)) {
    d = g->d;
    f = radial_functionals(*g, field.values, RadialProfile{}, field.tau, qd);
  } else {
    const auto& cg = std::get<CartesianGrid>(field.grid);
    d = cg.d;
    const std::vector<double> zero(field.values.size() * static_cast<std::size_t>(d), 0.0);
    f = cartesian_functionals(cg, field.values, zero, 0.0, qd);
  }
  (void)d;
  return GradNorms{std::pow(f.N, 1.0 / qd), std::pow(f.identity_residual, 1.0 / qd)};
}

Functionals functionals(const SolutionField& field, const FormBoundedDrift& drift, const Rational& q) {
  const double qd = to_double(q);
  Functionals f;
  if (const auto* g = std::get_if<RadialGrid>(&field.grid)) {
    f = radial_functionals(*g, field.values, drift.radial_profile(), field.tau, qd);
  } else {
    const auto& cg = std::get<CartesianGrid>(field.grid);
    const CartesianLayout L(cg);
    std::vector<double> bfield(L.total * static_cast<std::size_t>(cg.d), 0.0);
    for (std::size_t i = 0; i < L.total; ++i) {
      std::array<int, 3> idx{};
      L.index(i, idx);
      std::array<double, 3> x{}, b{};
      for (int k = 0; k < cg.d; ++k) x[static_cast<std::size_t>(k)] = -cg.half_width + cg.dx() * idx[static_cast<std::size_t>(k)];
      drift.eval_spatial_into(std::span<const double>(x.data(), static_cast<std::size_t>(cg.d)),
                              std::span<double>(b.data(), static_cast<std::size_t>(cg.d)));
      for (int k = 0; k < cg.d; ++k) bfield[static_cast<std::size_t>(k) * L.total + i] = b[static_cast<std::size_t>(k)];
    }
    f = cartesian_functionals(cg, field.values, bfield, drift.time_factor(field.tau), qd);
  }
  f.identity_residual = 0.0;
  return f;
}

Functionals functional_diagnostics(const SolutionField& field, const SolutionField& prev, const SolutionField& next,
                                   const FormBoundedDrift& drift, const Rational& q) {
  require(next.tau > prev.tau, ErrorKind::domain, "neighbouring snapshots must be ordered in time");
  Functionals f = functionals(field, drift, q);
  const double np = functionals(prev, drift, q).N, nn = functionals(next, drift, q).N;
  const double qd = to_double(q);
  f.identity_residual = std::abs((nn - np) / (next.tau - prev.tau) / qd + f.I + (qd - 2.0) * f.J - f.X);
  return f;
}

double sobolev_constant(int d) {
  require(d >= 3, ErrorKind::domain, "Sobolev constant needs d >= 3");
  return std::pow(boost::math::tgamma(static_cast<double>(d)) / boost::math::tgamma(0.5 * d), 2.0 / d) /
         (std::numbers::pi * d * (d - 2));
}

GradientBoundReport verify_gradient_bound(const NormTrace& trace, const Rational& q, const Rational& delta, const GClass& g,
                                          double slack) {
  GradientBoundReport rep;
  const int d = trace.d;
  if (!admissibility::admissible(d, q, delta)) {
    rep.status = "inadmissible";
    return rep;
  }
  require(trace.size() >= 2, ErrorKind::domain, "trace needs at least two times");
  require(trace.identity_residual.size() == trace.size(), ErrorKind::domain, "trace has no identity residual");
  const double qd = to_double(q), sd = std::sqrt(to_double(delta));
  rep.kappa = admissibility::branch_margin(d, q, delta);
  if (d <= 4) {
    rep.time_coefficient = 2.0 / qd;
  } else {
    const double e = qd * sd / 4.0 / std::sqrt(qd * qd * sd * sd / 4.0 + (qd - 2.0) * (qd - 2.0));
    rep.time_coefficient = (1.0 + 2.0 * e) / qd;
  }
  rep.C1 = 4.0 * rep.kappa / (qd * qd * sobolev_constant(d) * rep.time_coefficient);
  const std::size_t n = trace.size();
  rep.c_delta = g.integral(trace.times.back()) - g.integral(trace.times.front());
  const bool g_zero = g.is_zero();

  double running_min = trace.grad_q_pow[0];
  for (std::size_t k = 1; k < n; ++k) {
    const double rel = trace.grad_q_pow[k] / running_min - 1.0;
    rep.max_relative_increase = std::max(rep.max_relative_increase, rel);
    if (g_zero && rel > slack) rep.monotonicity_violations.push_back(k);
    running_min = std::min(running_min, trace.grad_q_pow[k]);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double dN = time_derivative(trace.times, trace.grad_q_pow, k);
    const double lhs = rep.time_coefficient * dN + rep.kappa * trace.J_q[k];
    const double tol = 2.0 * trace.identity_residual[k] + 1e-12 * (std::abs(rep.time_coefficient * dN) + rep.kappa * trace.J_q[k]);
    const double excess = lhs - tol;
    rep.worst_inequality_excess = k == 0 ? excess : std::max(rep.worst_inequality_excess, excess);
    if (g_zero && excess > 0.0) rep.inequality_violations.push_back(k);
  }
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k)
    integral += 0.5 * (trace.times[k + 1] - trace.times[k]) * (trace.grad_qj_pow[k] + trace.grad_qj_pow[k + 1]);
  rep.integral_bound_lhs = *std::max_element(trace.grad_q_pow.begin(), trace.grad_q_pow.end()) + rep.C1 * integral;
  rep.integral_bound_rhs = trace.grad_q_pow.front();
  rep.status = rep.monotonicity_violations.empty() && rep.inequality_violations.empty() ? "passed" : "violated";
  return rep;
}

CauchyTable approximation_cauchy_check(const FormBoundedDrift& base, const RadialData& h, const RadialGrid& grid,
                                       const std::vector<int>& n_list, const std::vector<double>& eps_list,
                                       const CauchyOptions& opt) {
  require(n_list.size() >= 2 && n_list.size() == eps_list.size(), ErrorKind::domain,
          "need at least two indices with one eps each");
  for (std::size_t i = 1; i < n_list.size(); ++i) require(n_list[i] > n_list[i - 1], ErrorKind::domain, "n_list must increase");
  const double sd = std::sqrt(to_double(base.delta()));
  require(sd < 2.0 && opt.r_exponent > 2.0 / (2.0 - sd), ErrorKind::domain, "r must exceed 2/(2 - sqrt(delta))");
  std::vector<double> samples(static_cast<std::size_t>(opt.time_samples));
  for (int k = 0; k < opt.time_samples; ++k) samples[static_cast<std::size_t>(k)] = opt.t * k / (opt.time_samples - 1);

  std::vector<std::vector<SolutionField>> sols(n_list.size());
  parallel_for(n_list.size(), [&](std::size_t i) {
    const FormBoundedDrift bn = mollifier::build_regularized_drift(base, n_list[i], eps_list[i]);
    SolveOptions so;
    so.t = opt.t;
    so.dt = opt.dt;
    so.scheme = opt.scheme;
    so.snapshot_times = samples;
    so.functionals = false;
    sols[i] = solve_radial(bn, h, grid, so).snapshots;
  });

  const double sigma = sphere_area(grid.d - 1);
  CauchyTable table;
  for (std::size_t i = 0; i + 1 < n_list.size(); ++i) {
    CauchyRow row{n_list[i], n_list[i + 1], eps_list[i], eps_list[i + 1], 0.0, 0.0};
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const auto& u = sols[i][k].values;
      const auto& v = sols[i + 1][k].values;
      double acc = 0.0, sup = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) {
        const double e = std::abs(u[j] - v[j]);
        const double w = sigma * std::pow(grid.r(static_cast<int>(j)), grid.d - 1) * grid.dr() * (j + 1 == u.size() ? 0.5 : 1.0);
        acc += w * std::pow(e, opt.r_exponent);
        sup = std::max(sup, e);
      }
      row.dist_r = std::max(row.dist_r, std::pow(acc, 1.0 / opt.r_exponent));
      row.dist_inf = std::max(row.dist_inf, sup);
    }
    if (!table.rows.empty()) {
      table.decreasing_r = table.decreasing_r && row.dist_r < table.rows.back().dist_r;
      table.decreasing_inf = table.decreasing_inf && row.dist_inf < table.rows.back().dist_inf;
    }
    table.rows.push_back(row);
  }
  return table;
}

void write_trace_csv(std::ostream& out, const NormTrace& t) {
  out << "tau,sup_norm,grad_q,grad_qj_integrand,I_q,J_q,B_q,X_q,identity_residual\n" << std::setprecision(17);
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << t.times[k] << ',' << t.sup_norm[k] << ',' << t.grad_q[k] << ',' << t.grad_qj_pow[k] << ',' << t.I_q[k] << ','
        << t.J_q[k] << ',' << t.B_q[k] << ',' << t.X_q[k] << ',' << (k < t.identity_residual.size() ? t.identity_residual[k] : 0.0)
        << '\n';
  }
}

void write_cauchy_csv(std::ostream& out, const CauchyTable& table) {
  out << "n,n_next,eps,eps_next,dist_r,dist_inf\n" << std::setprecision(17);
  for (const auto& r : table.rows)
    out << r.n << ',' << r.n_next << ',' << r.eps << ',' << r.eps_next << ',' << r.dist_r << ',' << r.dist_inf << '\n';
}

void write_snapshot(const std::string& stem, const SolutionField& field, const Rational& q) {
  nlohmann::json meta;
  meta["tau"] = field.tau;
  meta["q"] = format_rational(q);
  meta["count"] = field.values.size();
  if (const auto* g = std::get_if<RadialGrid>(&field.grid)) {
    meta["grid"] = {{"kind", "radial"}, {"r_max", g->r_max}, {"n_r", g->n_r}, {"d", g->d}};
    meta["data"] = stem + ".csv";
    std::ofstream out(stem + ".csv");
    require(static_cast<bool>(out), ErrorKind::validation, "cannot write " + stem + ".csv");
    out << "r,u\n" << std::setprecision(17);
    for (std::size_t i = 0; i < field.values.size(); ++i) out << g->r(static_cast<int>(i)) << ',' << field.values[i] << '\n';
  } else {
    const auto& cg = std::get<CartesianGrid>(field.grid);
    meta["grid"] = {{"kind", "cartesian"}, {"half_width", cg.half_width}, {"n", cg.n}, {"d", cg.d}, {"order", "row-major"}};
    meta["data"] = stem + ".bin";
    meta["dtype"] = "float64-le";
    std::ofstream out(stem + ".bin", std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::validation, "cannot write " + stem + ".bin");
    out.write(reinterpret_cast<const char*>(field.values.data()), static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  }
  std::ofstream js(stem + ".json");
  require(static_cast<bool>(js), ErrorKind::validation, "cannot write " + stem + ".json");
  js << meta.dump(2) << '\n';
}

}  // namespace kolmo::pde

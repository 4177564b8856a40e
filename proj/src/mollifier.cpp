#include "kolmo/mollifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "kolmo/error.hpp"
#include "kolmo/parallel.hpp"

namespace kolmo::mollifier {

namespace {

using Gauss8 = boost::math::quadrature::gauss<double, 8>;

// Nodes and weights of the 8-point rule on [-1, 1], expanded from the
// symmetric half stored by boost.
struct Rule {
  std::array<double, 8> x{}, w{};
  Rule() {
    const auto& a = Gauss8::abscissa();
    const auto& b = Gauss8::weights();
    for (std::size_t i = 0; i < 4; ++i) {
      x[i] = -a[i];
      w[i] = b[i];
      x[7 - i] = a[i];
      w[7 - i] = b[i];
    }
  }
};

const Rule& rule() {
  static const Rule r;
  return r;
}

// Integrates f over [lo, hi] with 8-point panels no wider than width.
template <class F>
double panels(F&& f, double lo, double hi, double width) {
  if (hi <= lo) return 0.0;
  const int m = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
  const double h = (hi - lo) / m;
  const Rule& g = rule();
  double acc = 0.0;
  for (int p = 0; p < m; ++p) {
    const double mid = lo + (p + 0.5) * h;
    double s = 0.0;
    for (std::size_t k = 0; k < 8; ++k) s += g.w[k] * f(mid + 0.5 * h * g.x[k]);
    acc += 0.5 * h * s;
  }
  return acc;
}

double sphere_area(int m) {
  // area of the unit sphere S^m in R^{m+1}
  const double k = 0.5 * (m + 1);
  return 2.0 * std::pow(std::numbers::pi, k) / boost::math::tgamma(k);
}

// sigma_{d-2} int_0^2 exp(-a t) (1 - t) (t (2 - t))^{(d-3)/2} dt: the angular
// average of the kernel against the radial direction.
double angular_factor(int d, double a) {
  if (d == 3) {
    double v;
    if (a < 0.05) {
      v = a * (2.0 / 3 + a * (-2.0 / 3 + a * (2.0 / 5 + a * (-8.0 / 45 + a * (4.0 / 63 + a * (-2.0 / 105 + a * 2.0 / 405))))));
    } else {
      v = ((a - 1) + (a + 1) * std::exp(-2 * a)) / (a * a);
    }
    return 2.0 * std::numbers::pi * v;
  }
  const double p = 0.5 * (d - 3);
  auto f = [a, p](double t) { return std::exp(-a * t) * (1 - t) * std::pow(t * (2 - t), p); };
  const double hi = std::min(2.0, 40.0 / std::max(a, 1e-300));
  double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, hi, 15, 1e-12);
  if (hi < 2.0) v += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, hi, 2.0, 5, 1e-12);
  return sphere_area(d - 2) * v;
}

double kernel_radius(double epsilon) { return kTruncation * std::sqrt(2.0 * epsilon); }

std::vector<double> kernel_weights(double spacing, double epsilon) {
  const int K = static_cast<int>(std::floor(kernel_radius(epsilon) / spacing));
  std::vector<double> w(static_cast<std::size_t>(2 * K + 1));
  double sum = 0.0;
  for (int k = -K; k <= K; ++k) {
    const double s = k * spacing;
    sum += w[static_cast<std::size_t>(k + K)] = std::exp(-s * s / (4.0 * epsilon));
  }
  for (double& v : w) v /= sum;
  return w;
}

bool selected(const GriddedField& f, std::size_t axis, MollifyAxes axes) {
  const bool is_time = f.has_time && axis == 0;
  switch (axes) {
    case MollifyAxes::space: return !is_time;
    case MollifyAxes::time: return is_time;
    case MollifyAxes::spacetime: return true;
  }
  return false;
}

void convolve_axis(const GriddedField& in, GriddedField& out, std::size_t axis, const std::vector<double>& w) {
  const int n = in.axes[axis].count;
  const std::size_t st = in.stride(axis);
  const std::size_t total = in.size();
  const std::size_t block = st * static_cast<std::size_t>(n);
  const int K = static_cast<int>(w.size() / 2);
  const std::size_t lines = total / static_cast<std::size_t>(n);
  parallel_for(lines, [&](std::size_t line) {
    const std::size_t outer = line / st, inner = line % st;
    const std::size_t base = outer * block + inner;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      const int lo = std::max(-K, -i), hi = std::min(K, n - 1 - i);
      for (int k = lo; k <= hi; ++k) acc += w[static_cast<std::size_t>(k + K)] * in.values[base + static_cast<std::size_t>(i + k) * st];
      out.values[base + static_cast<std::size_t>(i) * st] = acc;
    }
  });
}

}  // namespace

GriddedField GriddedField::make(std::vector<Axis> axes, bool has_time) {
  GriddedField f;
  f.axes = std::move(axes);
  f.has_time = has_time;
  for (const auto& a : f.axes) require(a.count >= 1 && a.spacing > 0, ErrorKind::domain, "grid axes need nodes and positive spacing");
  f.values.assign(f.size(), 0.0);
  return f;
}

std::size_t GriddedField::size() const {
  std::size_t n = axes.empty() ? 0 : 1;
  for (const auto& a : axes) n *= static_cast<std::size_t>(a.count);
  return n;
}

std::size_t GriddedField::stride(std::size_t axis) const {
  std::size_t s = 1;
  for (std::size_t k = axis + 1; k < axes.size(); ++k) s *= static_cast<std::size_t>(axes[k].count);
  return s;
}

double tail_mass_fraction(const GriddedField& f, double epsilon, MollifyAxes axes) {
  double total = 0.0, lost = 0.0;
  const std::size_t N = f.size();
  std::vector<std::vector<double>> tails(f.axes.size());
  for (std::size_t ax = 0; ax < f.axes.size(); ++ax) {
    if (!selected(f, ax, axes)) continue;
    const auto w = kernel_weights(f.axes[ax].spacing, epsilon);
    const int K = static_cast<int>(w.size() / 2), n = f.axes[ax].count;
    auto& t = tails[ax];
    t.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = -K; k <= K; ++k)
        if (i + k < 0 || i + k >= n) t[static_cast<std::size_t>(i)] += w[static_cast<std::size_t>(k + K)];
  }
  for (std::size_t idx = 0; idx < N; ++idx) {
    const double v = std::abs(f.values[idx]);
    if (v == 0.0) continue;
    total += v;
    double frac = 0.0;
    for (std::size_t ax = 0; ax < f.axes.size(); ++ax) {
      if (tails[ax].empty()) continue;
      const std::size_t i = (idx / f.stride(ax)) % static_cast<std::size_t>(f.axes[ax].count);
      frac += tails[ax][i];
    }
    lost += v * std::min(frac, 1.0);
  }
  return total > 0 ? lost / total : 0.0;
}

GriddedField heat_mollify(const GriddedField& f, double epsilon, MollifyAxes axes, bool check_margin) {
  require(epsilon > 0, ErrorKind::domain, "mollification scale must be positive");
  require(f.values.size() == f.size() && f.size() > 0, ErrorKind::domain, "field values do not match its grid");
  if (check_margin) {
    const double tail = tail_mass_fraction(f, epsilon, axes);
    require(tail <= kMaxTailMass, ErrorKind::margin,
            "grid margin too small for eps = " + std::to_string(epsilon) + " (tail mass " + std::to_string(tail) + ")");
  }
  GriddedField cur = f, next = f;
  for (std::size_t ax = 0; ax < f.axes.size(); ++ax) {
    if (!selected(f, ax, axes)) continue;
    convolve_axis(cur, next, ax, kernel_weights(f.axes[ax].spacing, epsilon));
    std::swap(cur, next);
  }
  return cur;
}

double mollified_radial_value(const FormBoundedDrift& base, double n, double epsilon, double r) {
  require(epsilon > 0 && n > 0, ErrorKind::domain, "need eps > 0 and n > 0");
  require(!base.time_dependent(), ErrorKind::domain, "radial mollification needs a time-independent base");
  const RadialProfile prof = base.radial_profile();
  if (r <= 0.0) return 0.0;
  const int d = base.dim();
  const double R = kernel_radius(epsilon);
  const double lo = std::max(0.0, r - R), hi = std::min(n, r + R);
  if (hi <= lo) return 0.0;
  const double norm = std::pow(4.0 * std::numbers::pi * epsilon, -0.5 * d);
  auto integrand = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    // rho^{d-1} beta(rho), with the Hardy term folded in to avoid the pole
    double wb = std::pow(rho, d - 2) * prof.hardy_coefficient;
    if (prof.table) wb += std::pow(rho, d - 1) * prof.smooth_part(0.0, rho);
    const double z = r - rho;
    return wb * norm * std::exp(-z * z / (4.0 * epsilon)) * angular_factor(d, r * rho / (2.0 * epsilon));
  };
  return panels(integrand, lo, hi, 0.5 * std::sqrt(epsilon));
}

RadialTable mollified_radial_table(const FormBoundedDrift& base, double n, double epsilon) {
  RadialTable t;
  t.dr = std::sqrt(epsilon) / 64.0;
  const auto count = static_cast<std::size_t>(std::ceil((n + kernel_radius(epsilon)) / t.dr)) + 2;
  t.beta.assign(count, 0.0);
  parallel_for(count, [&](std::size_t i) { t.beta[i] = mollified_radial_value(base, n, epsilon, t.dr * static_cast<double>(i)); });
  t.beta.back() = 0.0;
  return t;
}

TimeWindow time_window(double n, double epsilon) { return TimeWindow{n, epsilon}; }

GClass mollify_g(const GClass& g, double epsilon) {
  require(epsilon > 0, ErrorKind::domain, "mollification scale must be positive");
  switch (g.type) {
    case GClass::Type::zero: return GClass::zero();
    case GClass::Type::constant: return GClass::constant(g.value);
    case GClass::Type::tabulated: break;
  }
  const double R = kernel_radius(epsilon);
  const double lo = g.times.front() - R, hi = g.times.back() + R;
  const double step = std::sqrt(epsilon) / 4.0;
  const auto m = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  std::vector<double> ts(m + 1), vs(m + 1);
  const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * epsilon);
  for (std::size_t i = 0; i <= m; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m);
    ts[i] = t;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < g.times.size(); ++k) {
      const double a = std::max(g.times[k], t - R), b = std::min(g.times[k + 1], t + R);
      if (b <= a) continue;
      acc += panels([&](double s) { return g(s) * norm * std::exp(-(t - s) * (t - s) / (4 * epsilon)); }, a, b,
                    0.5 * std::sqrt(epsilon));
    }
    vs[i] = std::max(acc, 0.0);
  }
  return GClass::tabulated(std::move(ts), std::move(vs));
}

FormBoundedDrift build_regularized_drift(const FormBoundedDrift& base, int n, double epsilon_n) {
  require(n >= 1, ErrorKind::domain, "regularization index must be at least 1");
  require(epsilon_n > 0, ErrorKind::domain, "eps_n must be positive");
  if (!base.radial()) {
    CartesianSpec spec;
    spec.d = base.dim();
    spec.half_width = n + kernel_radius(epsilon_n) + 0.5;
    spec.n = 64;
    return build_regularized_drift_cartesian(base, n, epsilon_n, spec);
  }
  RadialTable table = mollified_radial_table(base, n, epsilon_n);
  return FormBoundedDrift::radial_table(base.dim(), std::move(table), base.delta(), mollify_g(base.g(), epsilon_n),
                                        DriftKind::bounded_smooth, time_window(n, epsilon_n));
}

FormBoundedDrift build_regularized_drift_cartesian(const FormBoundedDrift& base, int n, double epsilon_n,
                                                   const CartesianSpec& spec) {
  require(spec.d == base.dim(), ErrorKind::domain, "grid dimension differs from the drift");
  require(spec.d == 2 || spec.d == 3, ErrorKind::domain, "Cartesian regularization is 2D or 3D");
  require(n >= 1 && epsilon_n > 0, ErrorKind::domain, "need n >= 1 and eps > 0");
  const int d = spec.d, m = spec.n;
  const double h = 2.0 * spec.half_width / m;
  GriddedVectorField out;
  out.d = d;
  out.half_width = spec.half_width;
  out.n = m;
  std::size_t np = 1;
  for (int k = 0; k < d; ++k) np *= static_cast<std::size_t>(m);
  out.values.assign(np * static_cast<std::size_t>(d), 0.0);

  auto node = [&](std::size_t flat, std::array<double, 3>& x) {
    for (int k = d - 1; k >= 0; --k) {
      x[static_cast<std::size_t>(k)] = -spec.half_width + (static_cast<double>(flat % static_cast<std::size_t>(m)) + 0.5) * h;
      flat /= static_cast<std::size_t>(m);
    }
  };

  if (base.radial()) {
    const RadialTable table = mollified_radial_table(base, n, epsilon_n);
    parallel_for(np, [&](std::size_t i) {
      std::array<double, 3> x{};
      node(i, x);
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) r2 += x[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
      const double r = std::sqrt(r2);
      if (r == 0.0) return;
      const double s = table(r) / r;
      for (int k = 0; k < d; ++k) out.values[static_cast<std::size_t>(k) * np + i] = s * x[static_cast<std::size_t>(k)];
    });
  } else {
    std::vector<Axis> axes(static_cast<std::size_t>(d), Axis{-spec.half_width + 0.5 * h, h, m});
    for (int c = 0; c < d; ++c) {
      GriddedField f = GriddedField::make(axes, false);
      for (std::size_t i = 0; i < np; ++i) {
        std::array<double, 3> x{};
        node(i, x);
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) r2 += x[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
        if (r2 >= static_cast<double>(n) * n || r2 == 0.0) continue;
        std::array<double, 3> v{};
        base.eval_into(0.0, std::span<const double>(x.data(), static_cast<std::size_t>(d)),
                       std::span<double>(v.data(), static_cast<std::size_t>(d)));
        f.values[i] = v[static_cast<std::size_t>(c)];
      }
      const GriddedField g = heat_mollify(f, epsilon_n, MollifyAxes::space);
      std::copy(g.values.begin(), g.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(c) * np));
    }
  }
  return FormBoundedDrift::gridded(std::move(out), base.delta(), mollify_g(base.g(), epsilon_n),
                                   time_window(n, epsilon_n));
}

double sup_norm_bound(const FormBoundedDrift& base, double epsilon) {
  require(epsilon > 0, ErrorKind::domain, "eps must be positive");
  const GClass gn = mollify_g(base.g(), epsilon);
  double gsup = 0.0;
  if (gn.type == GClass::Type::constant) gsup = gn.value;
  if (gn.type == GClass::Type::tabulated) gsup = *std::max_element(gn.values.begin(), gn.values.end());
  return std::sqrt(base.dim() / 8.0 * to_double(base.delta()) / epsilon) + std::sqrt(gsup);
}

RegularizingSequence regularizing_member(const FormBoundedDrift& base, int n, double epsilon_n) {
  RegularizingSequence s{base, n, epsilon_n, static_cast<double>(n), static_cast<double>(n),
                         build_regularized_drift(base, n, epsilon_n)};
  return s;
}

namespace {

// Time integrals over [0, t] of theta^2, theta (theta - 1) and (theta - 1)^2,
// where theta is the time factor and 1 the sharp indicator (t <= n).
std::array<double, 3> window_moments(double n, double epsilon, double t) {
  const TimeWindow w = time_window(n, epsilon);
  std::array<double, 3> m{};
  const double width = 0.25 * std::sqrt(epsilon);
  m[0] = panels([&](double s) { const double v = w(s); return v * v; }, 0.0, t, width);
  m[1] = panels([&](double s) { const double v = w(s); return v * (v - 1.0); }, 0.0, t, width);
  m[2] = panels([&](double s) { const double v = w(s) - 1.0; return v * v; }, 0.0, t, width);
  return m;
}

}  // namespace

double l2_distance(const FormBoundedDrift& base, int n, double epsilon, const DistanceGrid& grid) {
  require(grid.t_end > 0 && grid.t_end <= n, ErrorKind::domain, "distance horizon must lie in (0, n]");
  require(grid.r_max > grid.exclude_radius, ErrorKind::domain, "empty distance region");
  const auto mom = window_moments(n, epsilon, grid.t_end);
  // |theta B_e - B|^2 = theta^2 |B_e - B|^2 + 2 theta (theta - 1) <B_e - B, B> + (theta - 1)^2 |B|^2
  double diff2 = 0.0, cross = 0.0, raw2 = 0.0;
  if (base.radial()) {
    const int d = base.dim();
    const RadialProfile prof = base.radial_profile();
    const double sigma = sphere_area(d - 1);
    const double width = 0.25 * std::sqrt(epsilon);
    const double lo = grid.exclude_radius, hi = std::min(grid.r_max, static_cast<double>(n));
    // the raw truncated field jumps at r = n; split there and resolve the layer
    const double R = kernel_radius(epsilon);
    std::vector<double> cuts{lo};
    for (double c : {static_cast<double>(n) - R, static_cast<double>(n), static_cast<double>(n) + R})
      if (c > lo && c < grid.r_max) cuts.push_back(c);
    cuts.push_back(grid.r_max);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double a = cuts[k], b = cuts[k + 1];
      const bool layer = b <= n + R && a >= n - R;
      const double w = layer ? width : std::max(width, 0.05);
      const int m = std::max(1, static_cast<int>(std::ceil((b - a) / w)));
      const double step = (b - a) / m;
      const Rule& g = rule();
      for (int p = 0; p < m; ++p) {
        const double mid = a + (p + 0.5) * step;
        for (std::size_t q = 0; q < 8; ++q) {
          const double r = mid + 0.5 * step * g.x[q];
          const double raw = r < hi ? prof(0.0, r) : 0.0;
          const double e = mollified_radial_value(base, n, epsilon, r) - raw;
          const double jw = sigma * std::pow(r, d - 1) * 0.5 * step * g.w[q];
          diff2 += e * e * jw;
          cross += e * raw * jw;
          raw2 += raw * raw * jw;
        }
      }
    }
  } else {
    const int d = base.dim();
    require(d == 2 || d == 3, ErrorKind::domain, "non-radial distances are computed in 2D or 3D");
    const int m = grid.cartesian_n;
    const double h = 2.0 * grid.r_max / m;
    std::vector<Axis> axes(static_cast<std::size_t>(d), Axis{-grid.r_max + 0.5 * h, h, m});
    std::vector<GriddedField> raw(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) raw[static_cast<std::size_t>(c)] = GriddedField::make(axes, false);
    const std::size_t np = raw[0].size();
    std::vector<char> inside(np, 0);
    for (std::size_t i = 0; i < np; ++i) {
      std::array<double, 3> x{};
      std::size_t flat = i;
      double r2 = 0.0;
      for (int k = d - 1; k >= 0; --k) {
        x[static_cast<std::size_t>(k)] = axes[0].node(static_cast<int>(flat % static_cast<std::size_t>(m)));
        flat /= static_cast<std::size_t>(m);
        r2 += x[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
      }
      inside[i] = r2 <= grid.r_max * grid.r_max && r2 >= grid.exclude_radius * grid.exclude_radius;
      if (r2 >= static_cast<double>(n) * n || r2 == 0.0) continue;
      std::array<double, 3> v{};
      base.eval_into(0.0, std::span<const double>(x.data(), static_cast<std::size_t>(d)),
                     std::span<double>(v.data(), static_cast<std::size_t>(d)));
      for (int c = 0; c < d; ++c) raw[static_cast<std::size_t>(c)].values[i] = v[static_cast<std::size_t>(c)];
    }
    const double cell = std::pow(h, d);
    for (int c = 0; c < d; ++c) {
      const auto& B = raw[static_cast<std::size_t>(c)];
      const GriddedField Be = heat_mollify(B, epsilon, MollifyAxes::space, false);
      for (std::size_t i = 0; i < np; ++i) {
        if (!inside[i]) continue;
        const double e = Be.values[i] - B.values[i];
        diff2 += e * e * cell;
        cross += e * B.values[i] * cell;
        raw2 += B.values[i] * B.values[i] * cell;
      }
    }
  }
  const double total = mom[0] * diff2 + 2.0 * mom[1] * cross + mom[2] * raw2;
  return std::sqrt(std::max(total, 0.0));
}

EpsilonSelection select_epsilons(const FormBoundedDrift& base, const DistanceGrid& grid, double tol, int n_max) {
  require(tol > 0, ErrorKind::domain, "tolerance must be positive");
  require(n_max >= 1, ErrorKind::domain, "n_max must be at least 1");
  EpsilonSelection sel;
  double eps = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    const double target = tol * std::ldexp(1.0, -n);
    DistanceGrid g = grid;
    g.t_end = std::min(grid.t_end, static_cast<double>(n));
    bool met = false;
    for (int halving = 0; halving < 60; ++halving) {
      eps *= 0.5;
      const double dist = l2_distance(base, n, eps, g);
      if (dist <= target) {
        sel.epsilons.push_back(eps);
        sel.distances.push_back(dist);
        met = true;
        break;
      }
    }
    require(met, ErrorKind::convergence, "no eps met the L2 criterion for n = " + std::to_string(n));
  }
  return sel;
}

}  // namespace kolmo::mollifier

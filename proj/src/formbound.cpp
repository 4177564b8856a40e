#include "kolmo/formbound.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "kolmo/error.hpp"
#include "kolmo/parallel.hpp"

namespace kolmo::formbound {

namespace {

double sphere_area(int m) {
  const double k = 0.5 * (m + 1);
  return 2.0 * std::pow(std::numbers::pi, k) / boost::math::tgamma(k);
}

// quintic smoothstep, 0 below 0 and 1 above 1
double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

std::vector<double> trapezoid_weights(const std::vector<double>& x) {
  std::vector<double> w(x.size(), 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double h = 0.5 * (x[i + 1] - x[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

// Second-order derivative on a nonuniform mesh, one-sided at the ends.
std::vector<double> derivative(const std::vector<double>& x, const std::vector<double>& f) {
  const std::size_t n = x.size();
  std::vector<double> df(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hm = x[i] - x[i - 1], hp = x[i + 1] - x[i];
    df[i] = (hm * hm * (f[i + 1] - f[i]) + hp * hp * (f[i] - f[i - 1])) / (hm * hp * (hm + hp));
  }
  if (n >= 2) {
    df[0] = (f[1] - f[0]) / (x[1] - x[0]);
    df[n - 1] = (f[n - 1] - f[n - 2]) / (x[n - 1] - x[n - 2]);
  }
  return df;
}

struct Terms {
  double lhs = 0.0, grad = 0.0, mass = 0.0;
};

Terms radial_slice(const FormBoundedDrift& drift, const RadialProfile& prof, const TestFunction& f, const RadialMesh& mesh,
                   double t) {
  const auto& r = mesh.r;
  std::vector<double> v(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) v[i] = f.radial_f(t, r[i]);
  const auto dv = derivative(r, v);
  const auto w = trapezoid_weights(r);
  const double sigma = sphere_area(mesh.d - 1);
  Terms out;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double jw = sigma * std::pow(r[i], mesh.d - 1) * w[i];
    if (jw == 0.0) continue;
    out.grad += dv[i] * dv[i] * jw;
    out.mass += v[i] * v[i] * jw;
    if (r[i] == 0.0 && drift.singular()) continue;
    const double b = prof(t, r[i]);
    out.lhs += b * b * v[i] * v[i] * jw;
  }
  return out;
}

Terms cartesian_slice(const FormBoundedDrift& drift, const TestFunction& f, const CartesianMesh& mesh, double t) {
  const int d = mesh.d, n = mesh.n;
  const double h = mesh.spacing();
  std::size_t np = 1;
  for (int k = 0; k < d; ++k) np *= static_cast<std::size_t>(n);
  std::vector<double> v(np);
  auto coords = [&](std::size_t flat, std::array<double, 3>& x, std::array<int, 3>& idx) {
    for (int k = d - 1; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = static_cast<int>(flat % static_cast<std::size_t>(n));
      x[static_cast<std::size_t>(k)] = -mesh.half_width + (idx[static_cast<std::size_t>(k)] + 0.5) * h;
      flat /= static_cast<std::size_t>(n);
    }
  };
  for (std::size_t i = 0; i < np; ++i) {
    std::array<double, 3> x{};
    std::array<int, 3> idx{};
    coords(i, x, idx);
    v[i] = f(t, std::span<const double>(x.data(), static_cast<std::size_t>(d)));
  }
  const double cell = std::pow(h, d);
  Terms out;
  for (std::size_t i = 0; i < np; ++i) {
    std::array<double, 3> x{};
    std::array<int, 3> idx{};
    coords(i, x, idx);
    double g2 = 0.0;
    std::size_t stride = 1;
    for (int k = d - 1; k >= 0; --k) {
      const int ik = idx[static_cast<std::size_t>(k)];
      double dk;
      if (ik == 0) dk = (v[i + stride] - v[i]) / h;
      else if (ik == n - 1) dk = (v[i] - v[i - stride]) / h;
      else dk = (v[i + stride] - v[i - stride]) / (2.0 * h);
      g2 += dk * dk;
      stride *= static_cast<std::size_t>(n);
    }
    out.grad += g2 * cell;
    out.mass += v[i] * v[i] * cell;
    if (drift.singular()) {
      bool at_pole = true;
      for (int k = 0; k < d; ++k) at_pole = at_pole && std::abs(x[static_cast<std::size_t>(k)]) <= 0.5 * h * (1 + 1e-12);
      if (at_pole) continue;
    }
    std::array<double, 3> b{};
    drift.eval_into(t, std::span<const double>(x.data(), static_cast<std::size_t>(d)),
                    std::span<double>(b.data(), static_cast<std::size_t>(d)));
    double b2 = 0.0;
    for (int k = 0; k < d; ++k) b2 += b[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(k)];
    out.lhs += b2 * v[i] * v[i] * cell;
  }
  return out;
}

}  // namespace

RadialMesh RadialMesh::uniform(int d, double r_max, int n) {
  require(d >= 1 && r_max > 0 && n >= 2, ErrorKind::domain, "uniform mesh needs r_max > 0 and n >= 2");
  RadialMesh m;
  m.d = d;
  for (int i = 0; i <= n; ++i) m.r.push_back(r_max * i / n);
  return m;
}

RadialMesh RadialMesh::geometric(int d, double r_max, double log_range, int n) {
  require(d >= 1 && r_max > 0 && log_range > 0 && n >= 2, ErrorKind::domain, "geometric mesh needs positive range and n >= 2");
  RadialMesh m;
  m.d = d;
  m.r.push_back(0.0);
  for (int k = 0; k < n; ++k) m.r.push_back(r_max * std::exp(-log_range * (1.0 - static_cast<double>(k) / (n - 1))));
  return m;
}

std::vector<double> TimeGrid::times() const {
  require(nodes >= 1 && t_end > 0, ErrorKind::domain, "time grid needs nodes and t_end > 0");
  if (nodes == 1) return {0.0};
  std::vector<double> t(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) t[static_cast<std::size_t>(i)] = t_end * i / (nodes - 1);
  return t;
}

std::vector<double> TimeGrid::weights() const {
  if (nodes == 1) return {1.0};
  return trapezoid_weights(times());
}

double TestFunction::operator()(double t, std::span<const double> x) const {
  if (!radial) return field_f(t, x);
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return radial_f(t, std::sqrt(r2));
}

FormRatio form_ratio(const FormBoundedDrift& drift, const TestFunction& f, const SpaceTimeGrid& grid) {
  const auto times = grid.time.times();
  const auto tw = grid.time.weights();
  FormRatio out;
  if (const auto* mesh = std::get_if<RadialMesh>(&grid.space)) {
    require(mesh->d == drift.dim(), ErrorKind::domain, "mesh and drift dimensions differ");
    require(f.radial, ErrorKind::not_radial, "test function " + f.id + " is not radial");
    const RadialProfile prof = drift.radial_profile();
    for (std::size_t k = 0; k < times.size(); ++k) {
      const Terms s = radial_slice(drift, prof, f, *mesh, times[k]);
      out.lhs += tw[k] * s.lhs;
      out.grad_term += tw[k] * s.grad;
      out.mass_term += tw[k] * drift.g()(times[k]) * s.mass;
    }
  } else {
    const auto& cm = std::get<CartesianMesh>(grid.space);
    require(cm.d == drift.dim(), ErrorKind::domain, "mesh and drift dimensions differ");
    require(cm.d == 2 || cm.d == 3, ErrorKind::domain, "Cartesian meshes are 2D or 3D");
    for (std::size_t k = 0; k < times.size(); ++k) {
      const Terms s = cartesian_slice(drift, f, cm, times[k]);
      out.lhs += tw[k] * s.lhs;
      out.grad_term += tw[k] * s.grad;
      out.mass_term += tw[k] * drift.g()(times[k]) * s.mass;
    }
  }
  require(out.grad_term >= 1e-14, ErrorKind::degenerate, "test function " + f.id + " has no gradient on this grid");
  out.ratio = (out.lhs - out.mass_term) / out.grad_term;
  return out;
}

FormEstimate estimate_form_bound(const FormBoundedDrift& drift, const TestFunctionFamily& family, const SpaceTimeGrid& grid) {
  require(!family.members.empty(), ErrorKind::domain, "test function family is empty");
  FormEstimate est;
  est.rows.resize(family.members.size());
  parallel_for(family.members.size(), [&](std::size_t i) { est.rows[i] = form_ratio(drift, family.members[i], grid); });
  est.delta_hat = est.rows.front().ratio;
  for (const auto& r : est.rows) est.delta_hat = std::max(est.delta_hat, r.ratio);
  return est;
}

TestFunction near_optimizer(int d, double r_max, double log_range, double eta, double inner_fraction,
                            double outer_fraction, double pad) {
  const double L = log_range - pad;
  const double wi = inner_fraction * L, wo = outer_fraction * L;
  const double power = -(d - 2) / 2.0 + eta;
  TestFunction f;
  std::ostringstream id;
  id << "hardy_eta_" << eta;
  f.id = id.str();
  f.radial = true;
  f.radial_f = [=](double, double r) {
    if (r <= 0.0) return 0.0;
    const double s = std::log(r / r_max);
    const double on = smoothstep((s + log_range) / wi);
    const double off = smoothstep((-pad - s) / wo);
    if (on == 0.0 || off == 0.0) return 0.0;
    return std::pow(r / r_max, power) * on * off;
  };
  return f;
}

TestFunctionFamily near_optimizer_family(int d, double r_max, double log_range) {
  TestFunctionFamily fam;
  fam.description = "truncated Hardy near-optimizers r^{-(d-2)/2+eta} with log-scale cutoffs";
  fam.members.push_back(near_optimizer(d, r_max, log_range, 0.1, 0.2, 0.6));
  fam.members.push_back(near_optimizer(d, r_max, log_range, 0.2, 0.1, 0.8));
  fam.members.push_back(near_optimizer(d, r_max, log_range, 0.4, 0.1, 0.8));
  return fam;
}

TestFunctionFamily shell_packets(int d, std::vector<double> centers, double width) {
  (void)d;
  TestFunctionFamily fam;
  fam.description = "radial Gaussian shells exp(-(r-c)^2/w^2)";
  for (double c : centers) {
    TestFunction f;
    std::ostringstream id;
    id << "shell_" << c;
    f.id = id.str();
    f.radial = true;
    f.radial_f = [c, width](double t, double r) { return (1.0 + 0.5 * t) * std::exp(-(r - c) * (r - c) / (width * width)); };
    fam.members.push_back(std::move(f));
  }
  return fam;
}

TestFunctionFamily gaussian_packets(int d, std::vector<double> offsets, double width) {
  TestFunctionFamily fam;
  fam.description = "Gaussian packets exp(-|x-c|^2/w^2) centred on the first axis";
  for (double c : offsets) {
    TestFunction f;
    std::ostringstream id;
    id << "packet_" << c;
    f.id = id.str();
    f.radial = false;
    f.field_f = [c, width, d](double t, std::span<const double> x) {
      double r2 = (x[0] - c) * (x[0] - c);
      for (int k = 1; k < d; ++k) r2 += x[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
      return (1.0 + 0.5 * t) * std::exp(-r2 / (width * width));
    };
    fam.members.push_back(std::move(f));
  }
  return fam;
}

TestFunctionFamily random_bumps(int d, int count, double radius, std::uint64_t seed) {
  TestFunctionFamily fam;
  fam.description = "sums of three random Gaussian bumps";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.15, 0.35), a(-1.0, 1.0);
  for (int m = 0; m < count; ++m) {
    std::vector<std::vector<double>> centers;
    std::vector<double> widths, amps;
    for (int b = 0; b < 3; ++b) {
      std::vector<double> c(static_cast<std::size_t>(d));
      for (auto& ci : c) ci = 0.5 * radius * u(rng);
      centers.push_back(c);
      widths.push_back(w(rng) * radius);
      amps.push_back(a(rng));
    }
    TestFunction f;
    f.id = "bumps_" + std::to_string(m);
    f.radial = false;
    f.field_f = [centers, widths, amps, d](double, std::span<const double> x) {
      double v = 0.0;
      for (std::size_t b = 0; b < centers.size(); ++b) {
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
          const double z = x[static_cast<std::size_t>(k)] - centers[b][static_cast<std::size_t>(k)];
          r2 += z * z;
        }
        v += amps[b] * std::exp(-r2 / (widths[b] * widths[b]));
      }
      return v;
    };
    fam.members.push_back(std::move(f));
  }
  return fam;
}

void write_form_csv(std::ostream& out, const TestFunctionFamily& family, const FormEstimate& est) {
  out << "member_id,lhs,grad_term,mass_term,ratio\n" << std::setprecision(17);
  for (std::size_t i = 0; i < est.rows.size(); ++i) {
    const auto& r = est.rows[i];
    out << family.members[i].id << ',' << r.lhs << ',' << r.grad_term << ',' << r.mass_term << ',' << r.ratio << '\n';
  }
}

}  // namespace kolmo::formbound

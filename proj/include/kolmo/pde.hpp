#pragma once

// Finite-difference solvers for u_tau = Delta u - b . grad u, u(s) = h, and the
// gradient functionals that govern the L^q gradient estimate.

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kolmo/drift.hpp"
#include "kolmo/rational.hpp"

namespace kolmo::pde {

/// Nodes r_i = i dr, i = 0..n_r, dr = r_max/n_r; Dirichlet zero at r_max.
struct RadialGrid {
  double r_max = 8.0;
  int n_r = 1000;
  int d = 3;
  double dr() const { return r_max / n_r; }
  double r(int i) const { return dr() * i; }
};

/// Nodes -L + i dx, i = 0..n, dx = 2L/n; Dirichlet zero on the faces.
struct CartesianGrid {
  double half_width = 4.0;
  int n = 32;
  int d = 3;
  double dx() const { return 2.0 * half_width / n; }
  std::size_t points() const;
};

struct SolutionField {
  std::variant<RadialGrid, CartesianGrid> grid;
  double tau = 0.0;
  std::vector<double> values;
};

/// Time series of the gradient functionals, w = grad u.
struct NormTrace {
  Rational q;
  int d = 3;
  std::vector<double> times;
  std::vector<double> sup_norm;
  std::vector<double> grad_q;       ///< ||w||_q
  std::vector<double> grad_q_pow;   ///< ||w||_q^q
  std::vector<double> grad_qj_pow;  ///< ||w||_{qj}^q, j = d/(d-2)
  std::vector<double> I_q, J_q, B_q, X_q;
  std::vector<double> dt_term;      ///< <|u_tau|^2, |w|^{q-2}>
  std::vector<double> identity_residual;

  std::size_t size() const { return times.size(); }
  /// Fills identity_residual = |q^{-1} d/dtau ||w||_q^q + I + (q-2) J - X| using
  /// three-point differences in time (one-sided at the ends).
  void compute_residual();
};

/// dy/dt at t[k] from the three-point Lagrange stencil around k.
double time_derivative(const std::vector<double>& t, const std::vector<double>& y, std::size_t k);

enum class Scheme { implicit, imex, crank_nicolson };
const char* to_string(Scheme s) noexcept;
Scheme parse_scheme(const std::string& name);

struct SolveOptions {
  double s = 0.0;
  double t = 0.5;
  double dt = 1e-3;
  Scheme scheme = Scheme::implicit;
  Rational q{3};
  std::vector<double> snapshot_times;
  int trace_every = 1;
  bool functionals = true;
  double flux_tolerance = 1e-6;  ///< abort when boundary outflow exceeds this fraction of the initial mass
};

struct SolveResult {
  std::vector<SolutionField> snapshots;
  NormTrace trace;
  double initial_mass = 0.0;
  double boundary_outflow = 0.0;
  double min_value = 0.0;  ///< over every step, including the initial data
  double max_value = 0.0;
  double initial_min = 0.0;
  double initial_max = 0.0;
  std::size_t steps = 0;
};

using RadialData = std::function<double(double r)>;
using FieldData = std::function<double(std::span<const double> x)>;

/// h(r) = exp(-r^2) times a smooth cutoff from 0.9 R to R.
RadialData gaussian_initial(double cutoff_radius);

/// Radial solve. The exact Hardy term is absorbed into an effective dimension
/// d - sqrt(delta)(d-2)/2 (stability error if it is not positive). Implicit is
/// backward Euler with hybrid centred/upwind advection (monotone); imex treats
/// advection explicitly with dt <= dr/(2 max|beta|); crank_nicolson is centred.
SolveResult solve_radial(const FormBoundedDrift& drift, const RadialData& h, const RadialGrid& grid, const SolveOptions& opt);

/// Explicit Euler on the Cartesian box with hybrid advection; stability error
/// above the monotone step bound, unbounded_drift error for singular drifts.
SolveResult solve_cartesian(const FormBoundedDrift& drift, const FieldData& h, const CartesianGrid& grid, const SolveOptions& opt);
double cartesian_step_bound(const FormBoundedDrift& drift, const CartesianGrid& grid);

struct GradNorms {
  double norm_q = 0.0;
  double norm_qj = 0.0;
};
GradNorms grad_norms(const SolutionField& field, const Rational& q);

struct Functionals {
  double N = 0.0;  ///< ||w||_q^q
  double I = 0.0, J = 0.0, B = 0.0, X = 0.0;
  double dt_term = 0.0;
  double identity_residual = 0.0;
};

/// Functionals of one snapshot; the drift is evaluated at field.tau.
Functionals functionals(const SolutionField& field, const FormBoundedDrift& drift, const Rational& q);
/// As above, plus the identity residual from the neighbouring snapshots.
Functionals functional_diagnostics(const SolutionField& field, const SolutionField& prev, const SolutionField& next,
                                   const FormBoundedDrift& drift, const Rational& q);

/// Sharp constant c_d of ||v||_{2j}^2 <= c_d ||grad v||_2^2.
double sobolev_constant(int d);

struct GradientBoundReport {
  std::string status;  ///< "passed", "violated" or "inadmissible"
  double kappa = 0.0;
  double time_coefficient = 0.0;  ///< 2/q (d = 3, 4) or (1 + 2 eps)/q (d >= 5)
  double C1 = 0.0;
  double c_delta = 0.0;
  double max_relative_increase = 0.0;  ///< max_k N_k / min_{i<k} N_i - 1
  double worst_inequality_excess = 0.0;
  double integral_bound_lhs = 0.0;  ///< sup N + C1 int ||w||_{qj}^q
  double integral_bound_rhs = 0.0;  ///< e^{C2 c_delta} N(s), with C2 = 0 when g = 0
  std::vector<std::size_t> monotonicity_violations;
  std::vector<std::size_t> inequality_violations;
  bool passed() const { return status == "passed"; }
};

/// Checks the gradient bound on a trace (relative slack 1%). Only g = 0 yields
/// a pass/fail verdict on monotonicity; otherwise that part is reported.
GradientBoundReport verify_gradient_bound(const NormTrace& trace, const Rational& q, const Rational& delta, const GClass& g,
                                          double slack = 0.01);

struct CauchyOptions {
  double t = 0.5;
  double dt = 1e-3;
  double r_exponent = 4.0;
  int time_samples = 11;
  Scheme scheme = Scheme::implicit;
};

struct CauchyRow {
  int n = 0;
  int n_next = 0;
  double eps = 0.0;
  double eps_next = 0.0;
  double dist_r = 0.0;
  double dist_inf = 0.0;
};

struct CauchyTable {
  std::vector<CauchyRow> rows;
  bool decreasing_r = true;
  bool decreasing_inf = true;
};

/// Solves with b_n for each n (scale eps_list[i]) and tabulates sup-in-time L^r
/// and L^inf distances between consecutive solutions. Domain error unless
/// r_exponent > 2/(2 - sqrt(delta)).
CauchyTable approximation_cauchy_check(const FormBoundedDrift& base, const RadialData& h, const RadialGrid& grid,
                                       const std::vector<int>& n_list, const std::vector<double>& eps_list,
                                       const CauchyOptions& opt);

void write_trace_csv(std::ostream& out, const NormTrace& trace);
void write_cauchy_csv(std::ostream& out, const CauchyTable& table);
/// Writes <stem>.csv (radial) or <stem>.bin (Cartesian, little-endian doubles)
/// and a <stem>.json sidecar with grid metadata, time and q.
void write_snapshot(const std::string& stem, const SolutionField& field, const Rational& q);

}  // namespace kolmo::pde

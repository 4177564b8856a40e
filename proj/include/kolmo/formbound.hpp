#pragma once

// Discrete check of the form-bound inequality
//   int |b f|^2 <= delta int |grad f|^2 + int g |f|^2
// and empirical lower estimates of delta over families of test functions.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kolmo/drift.hpp"

namespace kolmo::formbound {

/// Radial nodes r_0 = 0 < r_1 < ... with measure sigma_{d-1} r^{d-1} dr.
struct RadialMesh {
  int d = 3;
  std::vector<double> r;

  static RadialMesh uniform(int d, double r_max, int n);
  /// r_0 = 0 followed by n nodes geometrically spaced on [R e^{-log_range}, R].
  static RadialMesh geometric(int d, double r_max, double log_range, int n);
};

/// Cell-centred cube [-L, L]^d, d = 2 or 3, n nodes per axis.
struct CartesianMesh {
  int d = 3;
  double half_width = 4.0;
  int n = 48;
  double spacing() const { return 2.0 * half_width / n; }
};

/// Trapezoid nodes on [0, t_end]; a single node means a time-independent slice of unit weight.
struct TimeGrid {
  double t_end = 1.0;
  int nodes = 1;
  std::vector<double> times() const;
  std::vector<double> weights() const;
};

struct SpaceTimeGrid {
  TimeGrid time;
  std::variant<RadialMesh, CartesianMesh> space;
};

struct TestFunction {
  std::string id;
  bool radial = true;
  std::function<double(double t, double r)> radial_f;                  ///< when radial
  std::function<double(double t, std::span<const double> x)> field_f;  ///< otherwise
  double operator()(double t, std::span<const double> x) const;
};

struct TestFunctionFamily {
  std::string description;
  std::vector<TestFunction> members;
};

struct FormRatio {
  double lhs = 0.0;
  double grad_term = 0.0;
  double mass_term = 0.0;
  double ratio = 0.0;
};

/// Degenerate error when grad_term < 1e-14; not_radial error when a radial mesh
/// meets a non-radial drift or test function. The node at the singular point
/// contributes nothing to lhs for singular drifts.
FormRatio form_ratio(const FormBoundedDrift& drift, const TestFunction& f, const SpaceTimeGrid& grid);

struct FormEstimate {
  double delta_hat = 0.0;
  std::vector<FormRatio> rows;  ///< one per member, in family order
};
FormEstimate estimate_form_bound(const FormBoundedDrift& drift, const TestFunctionFamily& family, const SpaceTimeGrid& grid);

/// r^{-(d-2)/2 + eta} with smooth cutoffs in s = ln(r/R): on for s in
/// [-log_range, -log_range + inner_width], off over the last outer_width
/// before s = -pad. The cutoff widths are fractions of log_range.
TestFunction near_optimizer(int d, double r_max, double log_range, double eta, double inner_fraction,
                            double outer_fraction, double pad = 0.5);
/// The three witnesses eta = 0.1, 0.2, 0.4 with widths tuned for a log-range of about 20.
TestFunctionFamily near_optimizer_family(int d, double r_max, double log_range);
/// Radial shells exp(-(r - c)^2 / w^2) times a slowly varying time factor.
TestFunctionFamily shell_packets(int d, std::vector<double> centers, double width);
/// Gaussian packets exp(-|x - c|^2 / w^2) centred on the first axis.
TestFunctionFamily gaussian_packets(int d, std::vector<double> offsets, double width);
/// Sums of a few random Gaussian bumps inside B(0, radius).
TestFunctionFamily random_bumps(int d, int count, double radius, std::uint64_t seed);

void write_form_csv(std::ostream& out, const TestFunctionFamily& family, const FormEstimate& est);

}  // namespace kolmo::formbound

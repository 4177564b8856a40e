#pragma once

// Heat-semigroup mollification and the regularizing sequence
// b_n = E^{1+d}_{eps_n}(1_{Q_n} b), Q_n = [0, n] x B(0, n).

#include <cstddef>
#include <vector>

#include "kolmo/drift.hpp"

namespace kolmo::mollifier {

/// Kernel support is cut at kTruncation * sqrt(2 eps), i.e. six standard
/// deviations of the one-dimensional heat kernel.
inline constexpr double kTruncation = 6.0;
inline constexpr double kMaxTailMass = 1e-8;

struct Axis {
  double origin = 0.0;
  double spacing = 1.0;
  int count = 0;
  double node(int i) const { return origin + spacing * i; }
};

/// Scalar field on a tensor grid, row-major. With has_time, axis 0 is time.
struct GriddedField {
  std::vector<Axis> axes;
  bool has_time = false;
  std::vector<double> values;

  static GriddedField make(std::vector<Axis> axes, bool has_time);
  std::size_t size() const;
  std::size_t stride(std::size_t axis) const;
  int space_dim() const { return static_cast<int>(axes.size()) - (has_time ? 1 : 0); }
};

enum class MollifyAxes { space, time, spacetime };

/// Discrete Gaussian convolution with (4 pi eps)^{-1/2} exp(-s^2/(4 eps)) along
/// each selected axis; values beyond the grid count as zero. With check_margin,
/// a margin error is raised when more than 1e-8 of the kernel-smeared mass of
/// f would leave the grid.
GriddedField heat_mollify(const GriddedField& f, double epsilon, MollifyAxes axes, bool check_margin = true);

/// Fraction of |f| mass that the kernel carries past the grid edges.
double tail_mass_fraction(const GriddedField& f, double epsilon, MollifyAxes axes);

/// Spatial part of E^d_eps(1_{B(0,n)} b) for a radial b, as the radial
/// component at radius r. base must be radial and not time dependent.
double mollified_radial_value(const FormBoundedDrift& base, double n, double epsilon, double r);

/// Tabulates mollified_radial_value on r = i h, h = sqrt(eps)/64, up to
/// n + 6 sqrt(2 eps).
RadialTable mollified_radial_table(const FormBoundedDrift& base, double n, double epsilon);

/// Time factor E^1_eps 1_{[0,n]}.
TimeWindow time_window(double n, double epsilon);

/// g_n = E^1_eps g (zero stays zero, constants stay constant).
GClass mollify_g(const GClass& g, double epsilon);

struct CartesianSpec {
  int d = 3;
  double half_width = 4.0;
  int n = 64;
};

/// b_n as a radial table (radial bases) or a gridded field (others, or when
/// cartesian is set). Result is bounded_smooth with the base delta and g_n.
FormBoundedDrift build_regularized_drift(const FormBoundedDrift& base, int n, double epsilon_n);
FormBoundedDrift build_regularized_drift_cartesian(const FormBoundedDrift& base, int n, double epsilon_n,
                                                   const CartesianSpec& spec);

/// sqrt(C(d) delta)/sqrt(eps) + sup sqrt(g_n) with C(d) = d/8.
double sup_norm_bound(const FormBoundedDrift& base, double epsilon);

struct RegularizingSequence {
  FormBoundedDrift base;
  int n = 1;
  double epsilon_n = 1.0;
  double q_radius = 1.0;
  double q_horizon = 1.0;
  FormBoundedDrift member;
};
RegularizingSequence regularizing_member(const FormBoundedDrift& base, int n, double epsilon_n);

/// Region of the L^2 selection criterion: [0, t_end] x B(0, r_max), minus
/// B(0, exclude_radius). Radial bases integrate in r; others on a cube of
/// cartesian_n points per axis.
struct DistanceGrid {
  double t_end = 1.0;
  double r_max = 2.0;
  double exclude_radius = 0.0;
  int cartesian_n = 24;
};

/// Space-time L^2 distance between E^{1+d}_eps(1_{Q_n} b) and 1_{Q_n} b on the grid.
double l2_distance(const FormBoundedDrift& base, int n, double epsilon, const DistanceGrid& grid);

struct EpsilonSelection {
  std::vector<double> epsilons;   ///< eps_1 > eps_2 > ...
  std::vector<double> distances;  ///< l2_distance at each selected eps
};

/// For n = 1..n_max, halves from eps_{n-1}/2 (eps_0 = 1) until the distance is
/// at most tol 2^{-n}. Convergence error after 60 halvings.
EpsilonSelection select_epsilons(const FormBoundedDrift& base, const DistanceGrid& grid, double tol, int n_max);

}  // namespace kolmo::mollifier

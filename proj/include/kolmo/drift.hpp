#pragma once

// Drift fields b(t, x) together with their form-bound metadata (delta, g).

#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kolmo/rational.hpp"

namespace kolmo {

enum class DriftKind { hardy, bounded_smooth, zero, custom_radial };
const char* to_string(DriftKind kind) noexcept;

/// The time-dependent part g of the form-bound. Tabulated g is piecewise
/// linear between nodes and zero outside them.
struct GClass {
  enum class Type { zero, constant, tabulated };
  Type type = Type::zero;
  double value = 0.0;
  std::vector<double> times;
  std::vector<double> values;

  static GClass zero() { return {}; }
  static GClass constant(double v);
  static GClass tabulated(std::vector<double> times, std::vector<double> values);

  double operator()(double t) const;
  /// c_delta(t) = int_0^t g.
  double integral(double t) const;
  bool is_zero() const;
};

/// Radial drift values on a uniform radius grid, zero beyond the last node.
struct RadialTable {
  double dr = 0.0;
  std::vector<double> beta;  ///< beta(i dr)

  double operator()(double r) const;
  double r_end() const { return dr * static_cast<double>(beta.size() - 1); }
};

/// Time factor of a space-time mollified truncation: the heat semigroup in
/// one variable applied to the indicator of [0, horizon].
struct TimeWindow {
  double horizon = 0.0;
  double epsilon = 0.0;  ///< 0 means no time mollification (sharp indicator)
  double operator()(double t) const;
};

/// Vector field sampled on a uniform Cartesian box [-L, L]^d, d = 2 or 3,
/// n points per axis at -L + (i + 1/2) h, multilinear interpolation, zero outside.
struct GriddedVectorField {
  int d = 3;
  double half_width = 0.0;
  int n = 0;
  std::vector<double> values;  ///< component-major: values[c * n^d + flat index]

  double spacing() const { return 2.0 * half_width / n; }
  std::size_t points() const;
  void eval_into(std::span<const double> x, std::span<double> out) const;
};

/// Radial part of a drift, b(t, x) = beta(t, |x|) x/|x|. An exact Hardy term
/// c/r is kept apart so solvers can treat it without sampling the pole.
struct RadialProfile {
  double hardy_coefficient = 0.0;
  std::shared_ptr<const RadialTable> table;
  std::function<double(double)> time_factor;  ///< multiplies the table part; empty means 1

  double operator()(double t, double r) const;
  double smooth_part(double t, double r) const;
  bool time_dependent() const { return table != nullptr && static_cast<bool>(time_factor); }
  /// sup over r of |smooth part| times sup of the window (<= 1).
  double smooth_sup() const;
};

class FormBoundedDrift {
 public:
  static FormBoundedDrift zero(int d);
  /// b(x) = sqrt(delta) (d-2)/2 x/|x|^2. Domain error for d < 3 or delta <= 0.
  static FormBoundedDrift hardy(int d, const Rational& delta);
  /// Constant vector c; form-bounded with any delta > 0 and g = |c|^2.
  static FormBoundedDrift constant(std::vector<double> c);
  /// a exp(-|x - center|^2 / w^2) direction; not radial.
  static FormBoundedDrift bump(std::vector<double> center, std::vector<double> direction, double width);
  static FormBoundedDrift radial_table(int d, RadialTable table, const Rational& delta, GClass g,
                                       DriftKind kind = DriftKind::custom_radial,
                                       std::optional<TimeWindow> window = std::nullopt);
  static FormBoundedDrift gridded(GriddedVectorField field, const Rational& delta, GClass g,
                                  std::optional<TimeWindow> window = std::nullopt);

  DriftKind kind() const { return kind_; }
  int dim() const { return d_; }
  const Rational& delta() const { return delta_; }
  const GClass& g() const { return g_; }
  bool radial() const;
  bool singular() const { return kind_ == DriftKind::hardy; }
  bool time_dependent() const;
  /// Hardy with delta above the nonexistence threshold 4(d/(d-2))^2.
  bool supercritical() const;

  /// Writes b(t, x) into out (size d). Singularity error at x = 0 for Hardy.
  void eval_into(double t, std::span<const double> x, std::span<double> out) const;
  std::vector<double> eval(double t, std::span<const double> x) const;
  std::vector<double> eval(double t, std::initializer_list<double> x) const;
  /// b(t, x) = time_factor(t) * spatial part; lets solvers sample the spatial part once.
  double time_factor(double t) const { return window_at(t); }
  void eval_spatial_into(std::span<const double> x, std::span<double> out) const;

  /// not_radial error for non-radial fields.
  RadialProfile radial_profile() const;
  /// Sup norm over space and time; +inf for singular kinds.
  double sup_norm() const;
  /// b~(t, x) = b(T - t, x).
  FormBoundedDrift time_reversed(double T) const;

  std::string describe() const;
  /// Flat key/value form used by config files (keys drift.*).
  std::map<std::string, std::string> to_config() const;

 private:
  FormBoundedDrift() = default;

  struct Bump {
    std::vector<double> center, direction;
    double width = 1.0;
  };

  DriftKind kind_ = DriftKind::zero;
  int d_ = 3;
  Rational delta_;
  GClass g_;
  double hardy_c_ = 0.0;
  std::vector<double> constant_;
  std::shared_ptr<const Bump> bump_;
  std::shared_ptr<const RadialTable> table_;
  std::shared_ptr<const GriddedVectorField> grid_;
  std::optional<TimeWindow> window_;
  // evaluation time is time_offset_ + time_sign_ * t
  double time_offset_ = 0.0;
  double time_sign_ = 1.0;

  double time_of(double t) const { return time_offset_ + time_sign_ * t; }
  double window_at(double t) const;
};

/// 4 (d/(d-2))^2.
Rational nonexistence_threshold(int d);
/// sqrt(delta) (d-2)/2.
double hardy_coefficient(int d, const Rational& delta);

/// Builds a drift from drift.* keys: kind = zero | hardy | constant | bump,
/// d, delta, c (comma list), center, direction, width. Validation error on
/// unknown kinds or missing keys.
FormBoundedDrift drift_from_config(const std::map<std::string, std::string>& kv);

}  // namespace kolmo

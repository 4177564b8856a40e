#pragma once

// Constraint calculus for the gradient estimate: the two coefficient margins,
// the delta caps they induce, and the old/new cap comparison curve.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kolmo/rational.hpp"

namespace kolmo::admissibility {

/// Margins closer to zero than this are not decided in binary64; the exact
/// rational sign decides them instead.
inline constexpr double kMarginSlack = 1e-12;

struct AdmissibilityQuery {
  int d = 3;
  Rational q;
  Rational delta;
  std::optional<Rational> mu;

  Rational epsilon() const { return q - d; }
  /// Throws Error(domain) unless d >= 3, q > 2, delta >= 0 and mu in (0,1).
  void validate() const;
};

enum class Verdict { admissible, inadmissible, indeterminate };
const char* to_string(Verdict v) noexcept;

/// q-1 - q^2 delta/4 - (q-2)^2/4 - (q-2) q sqrt(delta)/2, the coefficient that
/// must stay positive for d = 3, 4.
double star_margin(const Rational& q, const Rational& delta);
int star_margin_sign(const Rational& q, const Rational& delta);

/// q-1 - (q sqrt(delta)/2)(sqrt(q^2 delta/4 + (q-2)^2) + q - 2), used for d >= 5.
double star_prime_margin(const Rational& q, const Rational& delta);
int star_prime_margin_sign(const Rational& q, const Rational& delta);

/// ((sqrt(q-1) - (q-2)/2) 2/q)^2. Domain error when the bracket is not positive.
double delta_max_low_dim(const Rational& q);

struct HighDimCap {
  double delta_max = 0.0;
  bool side_condition = false;  ///< 16 mu > (1-mu)^4 (q-1)^2/(q-2)^4, decided exactly
};
HighDimCap delta_max_high_dim(const Rational& q, const Rational& mu);

struct BoundConstants {
  Rational a;           ///< (q-1)^2/(q-2)^4
  Rational mu_default;  ///< a/(16+a)
  double mu_alt = 0.0;  ///< 1 + 8/a - sqrt((1+8/a)^2 - 1)
  Rational c_old;       ///< 1/q^2
  double c_new = 0.0;   ///< delta_max_high_dim(q, mu_default)
};
BoundConstants bound_constants(const Rational& q);

/// Branch dispatch: d in {3,4} uses star_margin, d >= 5 star_prime_margin.
Verdict classify(int d, const Rational& q, const Rational& delta);
bool admissible(int d, const Rational& q, const Rational& delta);

/// The branch coefficient that multiplies J_q in the differential inequality.
double branch_margin(int d, const Rational& q, const Rational& delta);

struct AdmissibilityReport {
  AdmissibilityQuery query;
  double star_margin = 0.0;
  double star_prime_margin = 0.0;
  std::optional<double> delta_max_low;
  double delta_max_high = 0.0;
  bool high_side_condition = false;
  Rational a;
  Rational mu_default;
  double mu_alt = 0.0;
  double c_old = 0.0;
  double c_new = 0.0;
  Verdict verdict = Verdict::indeterminate;
  bool admissible = false;
};

AdmissibilityReport make_report(const AdmissibilityQuery& query);
nlohmann::json to_json(const AdmissibilityReport& report);

struct RatioRow {
  int d = 0;
  Rational q;
  double c_old = 0.0;
  double c_new = 0.0;
  double ratio = 0.0;
  double c_old_at_d = 0.0;     ///< 1/d^2, for the stronger comparison
  bool stronger_holds = false; ///< c_old(d) < c_new(d+eps)
};

/// Rows for d_min..d_max at q = d + eps. For d = 3, 4 the low-dimensional cap
/// stands in for c_new.
std::vector<RatioRow> ratio_table(int d_min, int d_max, const Rational& eps);
void write_ratio_csv(std::ostream& out, const std::vector<RatioRow>& rows);

}  // namespace kolmo::admissibility

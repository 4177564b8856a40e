#include "kolmo/admissibility.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include <nlohmann/json.hpp>

#include "kolmo/error.hpp"

namespace kolmo::admissibility {

namespace {

void require_q(const Rational& q) {
  require(q > 2, ErrorKind::domain, "q must exceed 2, got " + format_rational(q));
}

void require_delta(const Rational& delta) {
  require(delta >= 0, ErrorKind::domain, "delta must be nonnegative, got " + format_rational(delta));
}

}  // namespace

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::admissible: return "admissible";
    case Verdict::inadmissible: return "inadmissible";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

void AdmissibilityQuery::validate() const {
  require(d >= 3, ErrorKind::domain, "dimension must be at least 3");
  require_q(q);
  require_delta(delta);
  if (mu) require(*mu > 0 && *mu < 1, ErrorKind::domain, "mu must lie in (0,1)");
}

double star_margin(const Rational& q, const Rational& delta) {
  require_q(q);
  require_delta(delta);
  const double qd = to_double(q), s = std::sqrt(to_double(delta));
  // q-1 - ((q s + q - 2)/2)^2 is the same polynomial, written without cancellation
  const double half = 0.5 * (qd * s + qd - 2.0);
  return (qd - 1.0) - half * half;
}

int star_margin_sign(const Rational& q, const Rational& delta) {
  require_q(q);
  require_delta(delta);
  const Rational a = q - 1 - q * q * delta / 4 - (q - 2) * (q - 2) / 4;
  const Rational b = -(q - 2) * q / 2;
  return sign_plus_sqrt(a, b, delta);
}

double star_prime_margin(const Rational& q, const Rational& delta) {
  require_q(q);
  require_delta(delta);
  const double qd = to_double(q), dd = to_double(delta), s = std::sqrt(dd);
  const double root = std::sqrt(qd * qd * dd / 4.0 + (qd - 2.0) * (qd - 2.0));
  return qd - 1.0 - 0.5 * qd * s * (root + qd - 2.0);
}

int star_prime_margin_sign(const Rational& q, const Rational& delta) {
  require_q(q);
  require_delta(delta);
  // margin = L - C sqrt(delta E) with L = A - B sqrt(delta)
  const Rational A = q - 1;
  const Rational B = q * (q - 2) / 2;
  const Rational C = q / 2;
  const Rational E = q * q * delta / 4 + (q - 2) * (q - 2);
  const int sl = sign_plus_sqrt(A, -B, delta);
  const bool tail_zero = sgn(delta) == 0;
  if (tail_zero) return sl;
  if (sl <= 0) return -1;
  // both sides positive: compare L^2 with C^2 delta E
  const Rational P = A * A + B * B * delta - C * C * delta * E;
  return sign_plus_sqrt(P, -2 * A * B, delta);
}

double delta_max_low_dim(const Rational& q) {
  require_q(q);
  // sqrt(q-1) > (q-2)/2  <=>  4(q-1) > (q-2)^2 since q > 2
  require(4 * (q - 1) > (q - 2) * (q - 2), ErrorKind::domain,
          "low-dimensional cap is empty for q = " + format_rational(q));
  const double qd = to_double(q);
  const double root = (std::sqrt(qd - 1.0) - 0.5 * (qd - 2.0)) * 2.0 / qd;
  return root * root;
}

HighDimCap delta_max_high_dim(const Rational& q, const Rational& mu) {
  require_q(q);
  require(mu > 0 && mu < 1, ErrorKind::domain, "mu must lie in (0,1), got " + format_rational(mu));
  const Rational root = (1 - mu) * (q - 1) / ((q - 2) * q);
  const Rational cap = root * root;
  const Rational a = (q - 1) * (q - 1) / pow(q - 2, 4);
  HighDimCap out;
  out.delta_max = to_double(cap);
  out.side_condition = 16 * mu > pow(1 - mu, 4) * a;
  return out;
}

BoundConstants bound_constants(const Rational& q) {
  require_q(q);
  BoundConstants c;
  c.a = (q - 1) * (q - 1) / pow(q - 2, 4);
  c.a.canonicalize();
  c.mu_default = c.a / (16 + c.a);
  c.mu_default.canonicalize();
  const double m = 1.0 + 8.0 / to_double(c.a);
  c.mu_alt = 1.0 / (m + std::sqrt(m * m - 1.0));
  c.c_old = 1 / (q * q);
  c.c_old.canonicalize();
  c.c_new = delta_max_high_dim(q, c.mu_default).delta_max;
  return c;
}

namespace {

Verdict verdict_from(double value, int exact_sign) {
  if (std::abs(value) > kMarginSlack) return value > 0 ? Verdict::admissible : Verdict::inadmissible;
  if (exact_sign > 0) return Verdict::admissible;
  if (exact_sign < 0) return Verdict::inadmissible;
  return Verdict::indeterminate;
}

void require_branch_args(int d, const Rational& q, const Rational& delta) {
  require(d >= 3, ErrorKind::domain, "dimension must be at least 3");
  require(q > d, ErrorKind::domain, "q must exceed d");
  require_delta(delta);
}

}  // namespace

Verdict classify(int d, const Rational& q, const Rational& delta) {
  require_branch_args(d, q, delta);
  if (d <= 4) return verdict_from(star_margin(q, delta), star_margin_sign(q, delta));
  return verdict_from(star_prime_margin(q, delta), star_prime_margin_sign(q, delta));
}

bool admissible(int d, const Rational& q, const Rational& delta) {
  return classify(d, q, delta) == Verdict::admissible;
}

double branch_margin(int d, const Rational& q, const Rational& delta) {
  require_branch_args(d, q, delta);
  return d <= 4 ? star_margin(q, delta) : star_prime_margin(q, delta);
}

AdmissibilityReport make_report(const AdmissibilityQuery& query) {
  query.validate();
  AdmissibilityReport r;
  r.query = query;
  r.star_margin = star_margin(query.q, query.delta);
  r.star_prime_margin = star_prime_margin(query.q, query.delta);
  try {
    r.delta_max_low = delta_max_low_dim(query.q);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::domain) throw;
  }
  const BoundConstants c = bound_constants(query.q);
  const HighDimCap high = delta_max_high_dim(query.q, query.mu.value_or(c.mu_default));
  r.delta_max_high = high.delta_max;
  r.high_side_condition = high.side_condition;
  r.a = c.a;
  r.mu_default = c.mu_default;
  r.mu_alt = c.mu_alt;
  r.c_old = to_double(c.c_old);
  r.c_new = c.c_new;
  if (query.q > query.d) {
    r.verdict = classify(query.d, query.q, query.delta);
  } else {
    r.verdict = Verdict::inadmissible;
  }
  r.admissible = r.verdict == Verdict::admissible;
  return r;
}

nlohmann::json to_json(const AdmissibilityReport& r) {
  nlohmann::json j;
  j["d"] = r.query.d;
  j["q"] = format_rational(r.query.q);
  j["delta"] = format_rational(r.query.delta);
  j["epsilon"] = format_rational(r.query.epsilon());
  if (r.query.mu) j["mu"] = format_rational(*r.query.mu);
  j["star_margin"] = r.star_margin;
  j["star_prime_margin"] = r.star_prime_margin;
  j["delta_max_low"] = r.delta_max_low ? nlohmann::json(*r.delta_max_low) : nlohmann::json(nullptr);
  j["delta_max_high"] = r.delta_max_high;
  j["high_side_condition"] = r.high_side_condition;
  j["a"] = format_rational(r.a);
  j["mu_default"] = format_rational(r.mu_default);
  j["mu_alt"] = r.mu_alt;
  j["c_old"] = r.c_old;
  j["c_new"] = r.c_new;
  j["verdict"] = to_string(r.verdict);
  j["admissible"] = r.admissible;
  return j;
}

std::vector<RatioRow> ratio_table(int d_min, int d_max, const Rational& eps) {
  require(d_min >= 3 && d_min <= d_max, ErrorKind::domain, "need 3 <= d_min <= d_max");
  require(eps > 0, ErrorKind::domain, "epsilon must be positive");
  std::vector<RatioRow> rows;
  for (int d = d_min; d <= d_max; ++d) {
    RatioRow row;
    row.d = d;
    row.q = d + eps;
    row.c_old = to_double(1 / (row.q * row.q));
    row.c_new = d >= 5 ? bound_constants(row.q).c_new : delta_max_low_dim(row.q);
    row.ratio = row.c_new / row.c_old;
    row.c_old_at_d = 1.0 / (static_cast<double>(d) * d);
    row.stronger_holds = row.c_old_at_d < row.c_new;
    rows.push_back(row);
  }
  return rows;
}

void write_ratio_csv(std::ostream& out, const std::vector<RatioRow>& rows) {
  out << "d,q,c_old,c_new,ratio\n";
  out << std::setprecision(17);
  for (const auto& r : rows)
    out << r.d << ',' << format_rational(r.q) << ',' << r.c_old << ',' << r.c_new << ',' << r.ratio << '\n';
}

}  // namespace kolmo::admissibility

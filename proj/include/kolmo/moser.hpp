#pragma once

// Exponent bookkeeping of the parabolic Moser iteration: the ladder r_n and the
// weights alpha_n, gamma_n, Gamma_n that accumulate along it.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kolmo/rational.hpp"

namespace kolmo::moser {

struct MoserSchedule {
  int d = 0;
  Rational q;
  Rational delta;
  Rational r0;
  int k = 3;
  Rational beta;
  Rational t_frak;   ///< geometric ratio of the ladder, 1/(1-beta)
  Rational j1;       ///< d/(d-2+2 beta)
  Rational x;        ///< q/2
  Rational x_prime;  ///< x/(x-1)
  std::vector<Rational> r_seq;      ///< r_1..r_N by the recursion x'(r_{n+1}-2) = j1 r_n
  std::vector<Rational> r_closed;   ///< r_1..r_N by the closed form
  std::vector<Rational> alpha_seq;  ///< from the n-term sum of products
  std::vector<Rational> gamma_seq;  ///< from the product of (1 - 2/r_i)
  std::vector<double> Gamma_seq;    ///< Gamma_n, evaluated in log space
  std::vector<double> log_Gamma_root;  ///< log Gamma_n^{1/(2k)}
  Rational a_env;  ///< r_1/(t-1)
  Rational b_env;  ///< r_1/t

  std::size_t size() const { return r_seq.size(); }
};

/// beta solving t = j1/x' = 1/(1-beta); for q = d+1 it equals 2/(d^2+d+2).
Rational select_beta(int d, const Rational& q);

/// Lower bound 2/(2 - sqrt(delta)) for the seed exponent, decided exactly.
bool seed_exponent_ok(const Rational& r0, const Rational& delta);

/// Builds the schedule. delta defaults to the reference value 1/d^2.
/// Domain error if r0 <= 2/(2-sqrt(delta)), k <= 2, q <= d or beta outside (0,1).
MoserSchedule build_schedule(int d, const Rational& q, const Rational& r0, int k, int n_max,
                             std::optional<Rational> delta = std::nullopt);

struct ScheduleLimits {
  Rational alpha_bound;  ///< (r0/x' + 2 - r0/j1)^{-1}
  Rational gamma_lower;  ///< (r0/x')(r0/x' + 2t/(t-1))^{-1}
  Rational gamma_upper;  ///< 1
  double log_Gamma_bound = 0.0;       ///< log of [a^{1/(t-1)} t^{t/(t-1)^2}]^{2k/b}
  double log_Gamma_root_bound = 0.0;  ///< log of [a^{1/(t-1)} t^{t/(t-1)^2}]^{1/b}
  double Gamma_bound() const;
};

/// Closed-form limits. Domain error on an empty schedule.
ScheduleLimits schedule_limits(const MoserSchedule& s);

struct VerificationReport {
  bool passed = true;
  std::string failed_identity;  ///< empty when passed
  std::size_t failed_index = 0; ///< 1-based n of the first violation
  std::size_t identities_checked = 0;
};

/// Checks every identity and bound along the schedule; stops at the first violation.
VerificationReport verify_schedule(const MoserSchedule& s);

/// nu(tau) = tau^{gamma/(r0(x-1))} on (0,1], tau^{1/(r0(x-1))} beyond.
double nu(const MoserSchedule& s, double tau);

/// CSV: n,r_n,alpha_n,gamma_n,Gamma_n followed by binary64 columns.
void write_schedule_csv(std::ostream& out, const MoserSchedule& s);

}  // namespace kolmo::moser

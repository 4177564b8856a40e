#include "kolmo/moser.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "kolmo/error.hpp"

namespace kolmo::moser {

Rational select_beta(int d, const Rational& q) {
  require(d >= 3, ErrorKind::domain, "dimension must be at least 3");
  require(q > d, ErrorKind::domain, "q must exceed d");
  // d(q-2)(1-beta) = q(d-2+2beta)  =>  beta = 2(q-d)/(2q + d(q-2))
  Rational beta = 2 * (q - d) / (2 * q + d * (q - 2));
  beta.canonicalize();
  return beta;
}

bool seed_exponent_ok(const Rational& r0, const Rational& delta) {
  require(delta >= 0 && delta < 4, ErrorKind::domain, "delta must lie in [0,4)");
  if (r0 <= 0) return false;
  // r0 > 2/(2-s)  <=>  (2 r0 - 2)/r0 > s  with s = sqrt(delta) >= 0
  const Rational lhs = (2 * r0 - 2) / r0;
  if (lhs <= 0) return false;
  return lhs * lhs > delta;
}

MoserSchedule build_schedule(int d, const Rational& q, const Rational& r0, int k, int n_max,
                             std::optional<Rational> delta) {
  require(k > 2, ErrorKind::domain, "k must exceed 2");
  require(n_max >= 0, ErrorKind::domain, "n_max must be nonnegative");
  MoserSchedule s;
  s.d = d;
  s.q = q;
  s.delta = delta.value_or(Rational(1, d * d));
  s.r0 = r0;
  s.k = k;
  require(seed_exponent_ok(r0, s.delta), ErrorKind::domain,
          "seed exponent r0 = " + format_rational(r0) + " must exceed 2/(2-sqrt(delta))");
  s.beta = select_beta(d, q);
  require(s.beta > 0 && s.beta < 1, ErrorKind::domain, "beta must lie in (0,1)");
  s.x = q / 2;
  s.x_prime = s.x / (s.x - 1);
  s.j1 = Rational(d) / (d - 2 + 2 * s.beta);
  s.t_frak = s.j1 / s.x_prime;
  s.t_frak.canonicalize();

  const Rational& t = s.t_frak;
  const Rational seed = r0 / s.x_prime;
  Rational r = 2 + seed;
  Rational t_pow = t;  // t^n
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) r = 2 + s.j1 * r / s.x_prime;
    r.canonicalize();
    s.r_seq.push_back(r);
    Rational closed = (t_pow * (seed + 2) - (t_pow / t) * seed - 2) / (t - 1);
    closed.canonicalize();
    s.r_closed.push_back(closed);
    t_pow *= t;
  }

  // alpha_n = sum_i (1/r_i) prod_{l>i} (1 - 2/r_l); gamma_n = prod_i (1 - 2/r_i)
  for (int n = 1; n <= n_max; ++n) {
    Rational alpha(0);
    Rational tail(1);
    for (int i = n; i >= 1; --i) {
      alpha += tail / s.r_seq[i - 1];
      tail *= 1 - 2 / s.r_seq[i - 1];
    }
    alpha.canonicalize();
    tail.canonicalize();
    s.alpha_seq.push_back(alpha);
    s.gamma_seq.push_back(tail);

    // Gamma_n^{1/2k} = prod_i r_i^{e_i}, e_i = (1/r_i) prod_{l>i}(1 - 2/r_l)
    double log_root = 0.0;
    Rational weight(1);
    for (int i = n; i >= 1; --i) {
      const Rational& ri = s.r_seq[i - 1];
      log_root += to_double(weight / ri) * std::log(to_double(ri));
      weight *= 1 - 2 / ri;
    }
    s.log_Gamma_root.push_back(log_root);
    s.Gamma_seq.push_back(std::exp(2.0 * k * log_root));
  }

  if (n_max >= 1) {
    s.a_env = s.r_seq.front() / (t - 1);
    s.b_env = s.r_seq.front() / t;
  } else {
    const Rational r1 = 2 + seed;
    s.a_env = r1 / (t - 1);
    s.b_env = r1 / t;
  }
  s.a_env.canonicalize();
  s.b_env.canonicalize();
  return s;
}

double ScheduleLimits::Gamma_bound() const { return std::exp(log_Gamma_bound); }

ScheduleLimits schedule_limits(const MoserSchedule& s) {
  require(s.size() > 0, ErrorKind::domain, "schedule is empty");
  const Rational& t = s.t_frak;
  const Rational seed = s.r0 / s.x_prime;
  ScheduleLimits lim;
  lim.alpha_bound = 1 / (seed + 2 - s.r0 / s.j1);
  lim.alpha_bound.canonicalize();
  lim.gamma_lower = seed / (seed + 2 * t / (t - 1));
  lim.gamma_lower.canonicalize();
  lim.gamma_upper = 1;
  const double td = to_double(t);
  const double inner = std::log(to_double(s.a_env)) / (td - 1.0) + td / ((td - 1.0) * (td - 1.0)) * std::log(td);
  lim.log_Gamma_root_bound = inner / to_double(s.b_env);
  lim.log_Gamma_bound = 2.0 * s.k * lim.log_Gamma_root_bound;
  return lim;
}

VerificationReport verify_schedule(const MoserSchedule& s) {
  VerificationReport rep;
  if (s.size() == 0) return rep;
  const ScheduleLimits lim = schedule_limits(s);
  const Rational& t = s.t_frak;
  auto fail = [&](const char* what, std::size_t n) {
    rep.passed = false;
    rep.failed_identity = what;
    rep.failed_index = n;
  };
  auto check = [&](bool ok, const char* what, std::size_t n) {
    ++rep.identities_checked;
    if (!ok && rep.passed) fail(what, n);
    return ok;
  };

  check(t == 1 / (1 - s.beta), "t = 1/(1-beta)", 0);
  check(t == s.j1 / s.x_prime, "t = j1/x'", 0);
  check(s.r_seq.front() == s.b_env * t, "r_1 = b t", 1);

  Rational t_pow = t;
  for (std::size_t n = 1; n <= s.size() && rep.passed; ++n) {
    const Rational& r = s.r_seq[n - 1];
    check(r == s.r_closed[n - 1], "recursion = closed form for r_n", n);
    Rational alpha_closed = (t_pow - 1) / (r * (t - 1));
    check(s.alpha_seq[n - 1] == alpha_closed, "alpha_n = (t^n - 1)/(r_n (t-1))", n);
    Rational gamma_closed = s.r0 * (t_pow / t) / (s.x_prime * r);
    check(s.gamma_seq[n - 1] == gamma_closed, "gamma_n = r0 t^{n-1}/(x' r_n)", n);
    check(s.alpha_seq[n - 1] <= lim.alpha_bound, "alpha_n <= alpha", n);
    check(s.gamma_seq[n - 1] > lim.gamma_lower, "gamma_n > gamma", n);
    check(s.gamma_seq[n - 1] < 1, "gamma_n < 1", n);
    check(s.b_env * t_pow <= r, "b t^n <= r_n", n);
    check(r <= s.a_env * t_pow, "r_n <= a t^n", n);
    const double lr = s.log_Gamma_root[n - 1];
    check(lr <= lim.log_Gamma_root_bound + 1e-12 * std::abs(lim.log_Gamma_root_bound),
          "Gamma_n^{1/2k} <= envelope bound", n);
    if (n > 1) check(s.Gamma_seq[n - 1] > s.Gamma_seq[n - 2], "Gamma_n increasing", n);
    t_pow *= t;
  }
  return rep;
}

double nu(const MoserSchedule& s, double tau) {
  require(tau > 0, ErrorKind::domain, "nu needs tau > 0");
  const double denom = to_double(s.r0 * (s.x - 1));
  if (tau <= 1.0) return std::pow(tau, to_double(schedule_limits(s).gamma_lower) / denom);
  return std::pow(tau, 1.0 / denom);
}

void write_schedule_csv(std::ostream& out, const MoserSchedule& s) {
  out << "n,r_n,alpha_n,gamma_n,Gamma_n,r_n_f64,alpha_n_f64,gamma_n_f64\n";
  out << std::setprecision(17);
  for (std::size_t n = 1; n <= s.size(); ++n) {
    out << n << ',' << format_rational(s.r_seq[n - 1]) << ',' << format_rational(s.alpha_seq[n - 1]) << ','
        << format_rational(s.gamma_seq[n - 1]) << ',' << s.Gamma_seq[n - 1] << ',' << to_double(s.r_seq[n - 1])
        << ',' << to_double(s.alpha_seq[n - 1]) << ',' << to_double(s.gamma_seq[n - 1]) << '\n';
  }
}

}  // namespace kolmo::moser

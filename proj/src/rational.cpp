#include "kolmo/rational.hpp"

#include <cctype>
#include <stdexcept>

#include "kolmo/error.hpp"

namespace kolmo {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::singularity: return "singularity";
    case ErrorKind::not_radial: return "not_radial";
    case ErrorKind::margin: return "margin";
    case ErrorKind::stability: return "stability";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::unbounded_drift: return "unbounded_drift";
    case ErrorKind::boundary_flux: return "boundary_flux";
    case ErrorKind::validation: return "validation";
  }
  return "unknown";
}

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

Integer parse_integer(std::string_view s, std::string_view whole) {
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) raise(ErrorKind::validation, "not a rational number: '" + std::string(whole) + "'");
  Integer z(std::string(s), 10);
  return negative ? Integer(-z) : z;
}

Rational parse_decimal(std::string_view s, std::string_view whole) {
  int exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    Integer ez = parse_integer(s.substr(e + 1), whole);
    if (!ez.fits_sint_p() || abs(ez) > 4000) raise(ErrorKind::validation, "exponent out of range: '" + std::string(whole) + "'");
    exponent = static_cast<int>(ez.get_si());
    s = s.substr(0, e);
  }
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  std::string digits;
  int scale = 0;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view ip = s.substr(0, dot), fp = s.substr(dot + 1);
    if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)))
      raise(ErrorKind::validation, "not a rational number: '" + std::string(whole) + "'");
    digits = std::string(ip) + std::string(fp);
    scale = static_cast<int>(fp.size());
  } else {
    if (!all_digits(s)) raise(ErrorKind::validation, "not a rational number: '" + std::string(whole) + "'");
    digits = std::string(s);
  }
  Rational r(Integer(digits, 10));
  r = r * pow(Rational(10), exponent - scale);
  r.canonicalize();
  return negative ? Rational(-r) : r;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) raise(ErrorKind::validation, "empty rational literal");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Integer p = parse_integer(text.substr(0, slash), text);
    Integer q = parse_integer(text.substr(slash + 1), text);
    if (q == 0) raise(ErrorKind::validation, "zero denominator: '" + std::string(text) + "'");
    Rational r(p, q);
    r.canonicalize();
    return r;
  }
  return parse_decimal(text, text);
}

std::string format_rational(const Rational& value) {
  Rational v = value;
  v.canonicalize();
  if (v.get_den() == 1) return v.get_num().get_str();
  return v.get_num().get_str() + "/" + v.get_den().get_str();
}

double to_double(const Rational& value) { return value.get_d(); }

Rational pow(const Rational& base, int exponent) {
  Rational result(1);
  Rational b = base;
  unsigned n = exponent < 0 ? static_cast<unsigned>(-exponent) : static_cast<unsigned>(exponent);
  mpz_pow_ui(result.get_num_mpz_t(), b.get_num_mpz_t(), n);
  mpz_pow_ui(result.get_den_mpz_t(), b.get_den_mpz_t(), n);
  if (exponent < 0) {
    if (result == 0) raise(ErrorKind::domain, "zero to a negative power");
    result = 1 / result;
  }
  result.canonicalize();
  return result;
}

int sign_plus_sqrt(const Rational& a, const Rational& b, const Rational& c) {
  if (sgn(c) < 0) raise(ErrorKind::domain, "square root of a negative rational");
  const int sa = sgn(a);
  const int sb = (sgn(c) == 0) ? 0 : sgn(b);
  if (sb == 0) return sa;
  if (sa == 0 || sa == sb) return sb;
  // opposite signs: compare a^2 with b^2 c
  const Rational lhs = a * a;
  const Rational rhs = b * b * c;
  if (lhs > rhs) return sa;
  if (lhs < rhs) return sb;
  return 0;
}

}  // namespace kolmo

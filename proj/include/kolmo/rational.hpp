#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace kolmo {

/// Arbitrary-precision rational. All sign-critical quantities go through this type.
using Rational = mpq_class;
using Integer = mpz_class;

/// Parses "p/q", integers, and decimal/scientific literals ("0.36", "1e-3")
/// into the exact rational they denote. Throws Error(validation) on malformed input.
Rational parse_rational(std::string_view text);

/// Canonical "p/q" (or "p" when the denominator is 1).
std::string format_rational(const Rational& value);

double to_double(const Rational& value);

/// Rational with an integer power, exponent may be negative.
Rational pow(const Rational& base, int exponent);

/// Exact sign of a + b*sqrt(c) for rational a, b and c >= 0.
int sign_plus_sqrt(const Rational& a, const Rational& b, const Rational& c);

inline int sign(const Rational& value) { return sgn(value); }

}  // namespace kolmo

#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "estim/errors.hpp"

namespace estim {

// All symbolic arithmetic is exact; doubles appear only at the numerical
// quadrature boundary.
using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

// Accepts "p/q", optionally signed integers, and decimal literals ("0.25").
// Throws DomainError on anything else, including a zero denominator.
Rational rational_from_string(std::string_view text);

// Prints "p/q" when the denominator is not one, the plain integer otherwise.
std::string to_string(const Rational& r);

double to_double(const Rational& r);

}  // namespace estim

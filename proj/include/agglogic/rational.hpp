#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>

namespace agglogic {

using Rational = boost::multiprecision::cpp_rational;

/// Parses "p/q", an integer, or a decimal literal such as "0.25" exactly.
Rational parse_rational(const std::string& text);
/// Exact value of a finite double.
Rational rational_from_double(double x);
std::string to_string(const Rational& q);
inline double to_double(const Rational& q) { return q.convert_to<double>(); }

}  // namespace agglogic

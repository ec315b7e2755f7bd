#include "agglogic/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace agglogic {

namespace {
// cpp_int treats a leading 0 as an octal prefix, so normalize first.
boost::multiprecision::cpp_int parse_integer(std::string s) {
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.erase(0, 1);
  }
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument("bad integer");
  }
  const auto nz = s.find_first_not_of('0');
  s = nz == std::string::npos ? "0" : s.substr(nz);
  boost::multiprecision::cpp_int v(s);
  return neg ? -v : v;
}
}  // namespace

Rational parse_rational(const std::string& text) {
  using boost::multiprecision::cpp_int;
  const auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      const cpp_int num = parse_integer(text.substr(0, slash));
      const cpp_int den = parse_integer(text.substr(slash + 1));
      if (den == 0) throw std::invalid_argument("zero denominator");
      return Rational(num, den);
    }
    const auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(parse_integer(text));
    const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    cpp_int den = 1;
    for (std::size_t i = dot + 1; i < text.size(); ++i) den *= 10;
    return Rational(parse_integer(digits), den);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed rational '" + text + "'");
  }
}

Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value has no rational form");
  int exp = 0;
  const double m = std::frexp(x, &exp);
  // m * 2^53 is an exact integer.
  const auto mant = static_cast<long long>(std::ldexp(m, 53));
  Rational q(mant);
  exp -= 53;
  boost::multiprecision::cpp_int p = 1;
  p <<= std::abs(exp);
  return exp >= 0 ? q * Rational(p) : q / Rational(p);
}

std::string to_string(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

}  // namespace agglogic

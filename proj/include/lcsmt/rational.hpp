#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <string>
#include <string_view>

#include "lcsmt/errors.hpp"

namespace lcsmt {

using Rational = boost::multiprecision::cpp_rational;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.convert_to<double>(); }

/// Parses "7", "-3/4" or a decimal literal such as "0.25" (taken exactly as written).
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto trim = [](std::string& v) {
    const auto a = v.find_first_not_of(" \t");
    const auto b = v.find_last_not_of(" \t");
    v = (a == std::string::npos) ? std::string{} : v.substr(a, b - a + 1);
  };
  trim(s);
  if (s.empty()) throw ValidationError("empty rational literal");
  try {
    const auto dot = s.find('.');
    if (dot == std::string::npos) {
      const auto slash = s.find('/');
      auto integer = [](std::string v) {
        const std::size_t sign = (!v.empty() && (v[0] == '-' || v[0] == '+')) ? 1 : 0;
        if (v.size() == sign || v.find_first_not_of("0123456789", sign) != std::string::npos)
          throw ValidationError("bad integer in rational literal: " + v);
        const auto nz = v.find_first_not_of('0', sign);
        const std::string mag = nz == std::string::npos ? "0" : v.substr(nz);
        return boost::multiprecision::cpp_int((v[0] == '-' ? "-" : "") + mag);
      };
      if (slash == std::string::npos) return Rational(integer(s));
      const auto den = integer(s.substr(slash + 1));
      if (den == 0) throw ValidationError("zero denominator in " + s);
      return Rational(integer(s.substr(0, slash)), den);
    }
    if (s.find_first_of("eE/") != std::string::npos)
      throw ValidationError("unsupported rational literal: " + s);
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    if (digits.empty() || digits == "-" || digits == "+") throw ValidationError("bad literal: " + s);
    const std::size_t frac = s.size() - dot - 1;
    // cpp_int reads a leading 0 as octal
    const std::size_t sign = (digits[0] == '-' || digits[0] == '+') ? 1 : 0;
    const auto nz = digits.find_first_not_of('0', sign);
    digits = digits.substr(0, sign) + (nz == std::string::npos ? std::string("0") : digits.substr(nz));
    if (digits.front() == '+') digits.erase(0, 1);
    boost::multiprecision::cpp_int den = 1;
    for (std::size_t i = 0; i < frac; ++i) den *= 10;
    return Rational(boost::multiprecision::cpp_int(digits), den);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse rational literal: " + s);
  }
}

/// Exact binary value of a finite double.
inline Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw ValidationError("non-finite value cannot be made rational");
  return Rational(x);
}

inline std::string to_string(const Rational& x) { return x.str(); }

}  // namespace lcsmt

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <string>
#include <string_view>
#include <type_traits>

namespace coinflip {

// Exact arithmetic mode. Probabilities built from bounded denominators stay
// closed under every prob-kit operation except logarithms and square roots.
using Rational = boost::multiprecision::cpp_rational;

template <class T>
inline constexpr bool is_exact_v = std::is_same_v<T, Rational>;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.convert_to<double>(); }

// Doubles convert to rationals exactly (every finite double is dyadic).
template <class T>
T from_double(double x) {
  return T(x);
}

// Parses "3", "0.25", "-1/3". Rationals keep decimal strings exact.
template <class T>
T parse_number(std::string_view text);

template <>
double parse_number<double>(std::string_view text);
template <>
Rational parse_number<Rational>(std::string_view text);

std::string to_string(double x);
std::string to_string(const Rational& x);

// Zero test used for identities: exact for rationals, absolute tolerance
// for doubles.
inline bool near_zero(double x, double tol) { return std::fabs(x) <= tol; }
inline bool near_zero(const Rational& x, double /*tol*/) { return x == 0; }

template <class T>
bool near_equal(const T& a, const T& b, double tol) {
  return near_zero(T(a - b), tol);
}

template <class T>
T abs_value(const T& x) {
  return x < 0 ? T(-x) : x;
}

}  // namespace coinflip

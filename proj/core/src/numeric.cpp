#include "coinflip/numeric.hpp"

#include "coinflip/error.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace coinflip {

namespace {

Rational parse_decimal(std::string_view text) {
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  Rational value = 0;
  Rational scale = 1;
  bool seen_dot = false;
  bool seen_digit = false;
  for (char c : text) {
    if (c == '.') {
      if (seen_dot) throw InvalidDistribution("malformed number");
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw InvalidDistribution("malformed number");
    seen_digit = true;
    if (seen_dot) {
      scale /= 10;
      value += scale * (c - '0');
    } else {
      value = value * 10 + (c - '0');
    }
  }
  if (!seen_digit) throw InvalidDistribution("malformed number");
  return negative ? Rational(-value) : value;
}

}  // namespace

template <>
Rational parse_number<Rational>(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_decimal(text);
  Rational num = parse_decimal(text.substr(0, slash));
  Rational den = parse_decimal(text.substr(slash + 1));
  if (den == 0) throw InvalidDistribution("zero denominator");
  return num / den;
}

template <>
double parse_number<double>(std::string_view text) {
  return to_double(parse_number<Rational>(text));
}

std::string to_string(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string to_string(const Rational& x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

}  // namespace coinflip

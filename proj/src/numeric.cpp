#include "colluder/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace colluder {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_number(std::string_view text) {
  throw std::invalid_argument("not a number: '" + std::string(text) + "'");
}

Rational parse_decimal_exact(std::string_view s) {
  // [sign] digits [. digits] [e|E [sign] digits]
  std::size_t i = 0;
  bool negative = false;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) negative = s[i++] == '-';
  std::string digits;
  int scale = 0;
  bool any = false;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    digits += s[i++];
    any = true;
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      digits += s[i++];
      --scale;
      any = true;
    }
  }
  if (!any) bad_number(s);
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    int exponent = 0;
    auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + s.size(), exponent);
    if (ec != std::errc() || ptr == s.data() + i) bad_number(s);
    i = static_cast<std::size_t>(ptr - s.data());
    scale += exponent;
  }
  if (i != s.size()) bad_number(s);
  // a leading zero would select octal
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
  boost::multiprecision::mpz_int numerator(digits);
  boost::multiprecision::mpz_int ten_power = boost::multiprecision::pow(boost::multiprecision::mpz_int(10),
                                                                        static_cast<unsigned>(std::abs(scale)));
  Rational value = scale >= 0 ? Rational(numerator * ten_power) : Rational(numerator, ten_power);
  return negative ? Rational(-value) : value;
}

}  // namespace

template <>
double parse_scalar<double>(std::string_view text) {
  const auto s = trim(text);
  if (s.find('/') != std::string_view::npos) return to_double(parse_scalar<Rational>(s));
  double value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) bad_number(text);
  return value;
}

template <>
Rational parse_scalar<Rational>(std::string_view text) {
  const auto s = trim(text);
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return parse_decimal_exact(s);
  const Rational num = parse_decimal_exact(trim(s.substr(0, slash)));
  const Rational den = parse_decimal_exact(trim(s.substr(slash + 1)));
  if (den == 0) bad_number(text);
  return num / den;
}

std::string format_scalar(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_scalar(const Rational& v) { return v.str(); }

}  // namespace colluder

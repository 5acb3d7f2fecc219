#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

namespace colluder {

using Rational = boost::multiprecision::mpq_rational;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
inline constexpr bool is_exact_v = !std::is_floating_point_v<Scalar>;

inline double to_double(double v) { return v; }
inline double to_double(const Rational& v) { return v.convert_to<double>(); }

template <typename To, typename From>
To scalar_cast(const From& v) {
  if constexpr (std::is_same_v<To, double>) {
    return to_double(v);
  } else {
    return To(v);
  }
}

/// Kahan-compensated for doubles; exact for rationals.
template <typename Scalar, typename Range>
Scalar compensated_sum(const Range& values) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    Scalar sum = 0, carry = 0;
    for (const auto& v : values) {
      const Scalar y = static_cast<Scalar>(v) - carry;
      const Scalar t = sum + y;
      carry = (t - sum) - y;
      sum = t;
    }
    return sum;
  } else {
    Scalar sum = 0;
    for (const auto& v : values) sum += v;
    return sum;
  }
}

template <typename Scalar>
Scalar compensated_sum(const Vector<Scalar>& v) {
  return compensated_sum<Scalar>(std::span<const Scalar>(v.data(), static_cast<std::size_t>(v.size())));
}

/// Parses "0.25", "1/4", "2.5e-3". Decimal input stays exact for rationals.
template <typename Scalar>
Scalar parse_scalar(std::string_view text);

template <>
double parse_scalar<double>(std::string_view text);
template <>
Rational parse_scalar<Rational>(std::string_view text);

/// Shortest round-tripping decimal for doubles, "p/q" for rationals.
std::string format_scalar(double v);
std::string format_scalar(const Rational& v);

/// splitmix64 step; used to derive independent seeds from (seed, index...).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine draw.
template <typename Engine>
double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace colluder

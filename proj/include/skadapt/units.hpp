#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skadapt {

// Item sizes live on an exact integer grid; `scale` grid units make up the
// normalized capacity 1. 128 bits so that geometric ladders such as
// eps^k with eps = 1e-3, k = 8 stay exact.
using Units = __int128;

inline constexpr Units units_max = static_cast<Units>(
    (static_cast<unsigned __int128>(1) << 126) - 1);

inline std::string to_string(Units u) {
  if (u == 0) return "0";
  bool neg = u < 0;
  unsigned __int128 m = neg ? static_cast<unsigned __int128>(-(u + 1)) + 1
                            : static_cast<unsigned __int128>(u);
  std::string out;
  while (m > 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(m % 10)));
    m /= 10;
  }
  if (neg) out.push_back('-');
  return {out.rbegin(), out.rend()};
}

inline Units parse_units(std::string_view s) {
  if (s.empty()) throw std::invalid_argument("empty integer literal");
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    i = 1;
  }
  if (i == s.size()) throw std::invalid_argument("bad integer literal");
  Units v = 0;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c < '0' || c > '9')
      throw std::invalid_argument("bad integer literal: " + std::string(s));
    if (v > (units_max - (c - '0')) / 10)
      throw std::out_of_range("integer literal too large: " + std::string(s));
    v = v * 10 + (c - '0');
  }
  return neg ? -v : v;
}

inline bool fits_int64(Units u) {
  return u >= std::numeric_limits<std::int64_t>::min() &&
         u <= std::numeric_limits<std::int64_t>::max();
}

inline double to_double(Units u) {
  return static_cast<double>(static_cast<long double>(u));
}

inline Units ipow(Units base, int exp) {
  Units r = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && r > units_max / base)
      throw std::out_of_range("grid power overflows 126 bits");
    r *= base;
  }
  return r;
}

struct UnitsHash {
  std::size_t operator()(Units u) const noexcept {
    auto x = static_cast<unsigned __int128>(u);
    std::uint64_t lo = static_cast<std::uint64_t>(x);
    std::uint64_t hi = static_cast<std::uint64_t>(x >> 64);
    std::uint64_t h = lo ^ (hi * 0x9e3779b97f4a7c15ULL);
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

}  // namespace skadapt

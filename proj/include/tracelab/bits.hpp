#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tracelab/rng.hpp"

namespace tracelab {

// Input strings live in {-1,+1}^n; traces additionally use 0 for padding.
using Bit = std::int8_t;
using BitString = std::vector<Bit>;

inline BitString parse_bits(std::string_view s) {
  BitString out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '+')
      out.push_back(+1);
    else if (c == '-')
      out.push_back(-1);
    else
      throw std::invalid_argument("bit string must use only '+' and '-'");
  }
  return out;
}

inline std::string bits_to_string(std::span<const Bit> x) {
  std::string s;
  s.reserve(x.size());
  for (Bit b : x) s.push_back(b > 0 ? '+' : '-');
  return s;
}

inline BitString random_bits(int n, RngStream& rng) {
  BitString x(static_cast<std::size_t>(n));
  for (auto& b : x) b = rng.next_bool(0.5) ? Bit{+1} : Bit{-1};
  return x;
}

inline BitString negated(std::span<const Bit> x) {
  BitString y(x.begin(), x.end());
  for (auto& b : y) b = static_cast<Bit>(-b);
  return y;
}

// Lexicographic order with -1 < +1.
inline bool lex_less(std::span<const Bit> a, std::span<const Bit> b) {
  const std::size_t m = a.size() < b.size() ? a.size() : b.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return a.size() < b.size();
}

// P_x(w) = sum_i x_i w^{i-1}, evaluated by Horner's rule.
inline std::complex<double> input_poly_eval(std::span<const Bit> x,
                                            std::complex<double> w) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = x.size(); i-- > 0;) {
    acc = acc * w + static_cast<double>(x[i]);
  }
  return acc;
}

}  // namespace tracelab

// gtc/semiring.hpp

// Copyright 2026  The GTC Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>

namespace gtc {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Stable -log(exp(-a) + exp(-b)) on negative-log costs.
inline double neg_log_add(double a, double b) {
  if (a == kInfinity) return b;
  if (b == kInfinity) return a;
  const double lo = std::min(a, b);
  return lo - std::log1p(std::exp(-std::abs(a - b)));
}

// Both semirings below carry weights as costs (negative log probabilities),
// so zero is +inf and one is 0 and times is addition. They differ in plus.

struct LogSemiring {
  static constexpr const char* kName = "log";
  static constexpr double zero() { return kInfinity; }
  static constexpr double one() { return 0.0; }
  static double plus(double a, double b) { return neg_log_add(a, b); }
  static constexpr double times(double a, double b) { return a + b; }
  // Left division: the c with times(b, c) == a. b must not be zero().
  static constexpr double divide(double a, double b) { return a - b; }
};

struct TropicalSemiring {
  static constexpr const char* kName = "tropical";
  static constexpr double zero() { return kInfinity; }
  static constexpr double one() { return 0.0; }
  static constexpr double plus(double a, double b) { return a < b ? a : b; }
  static constexpr double times(double a, double b) { return a + b; }
  static constexpr double divide(double a, double b) { return a - b; }
};

template <class S>
concept Semiring = requires(double a, double b) {
  { S::zero() } -> std::convertible_to<double>;
  { S::one() } -> std::convertible_to<double>;
  { S::plus(a, b) } -> std::convertible_to<double>;
  { S::times(a, b) } -> std::convertible_to<double>;
  { S::divide(a, b) } -> std::convertible_to<double>;
};

}  // namespace gtc

/* Copyright 2026 The smrf Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SMRF_COMMON_HPP_
#define SMRF_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace smrf {

// Error hierarchy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class TrainingAbort : public Error {
 public:
  using Error::Error;
};

enum class Parameterization { LinearByLinear, Gaussian, Smoothness };

// Which pairwise families are active: UserOnly is the per-user model (item-item
// weights), ItemOnly the per-item model (user-user weights).
enum class ModelScope { UserOnly, ItemOnly, Joint };

inline std::string to_string(Parameterization p) {
  switch (p) {
    case Parameterization::LinearByLinear: return "linear";
    case Parameterization::Gaussian: return "gauss";
    case Parameterization::Smoothness: return "smooth";
  }
  return "?";
}

inline std::string to_string(ModelScope s) {
  switch (s) {
    case ModelScope::UserOnly: return "user";
    case ModelScope::ItemOnly: return "item";
    case ModelScope::Joint: return "joint";
  }
  return "?";
}

inline Parameterization parse_parameterization(std::string_view s) {
  if (s == "linear" || s == "linear-linear" || s == "lbl") return Parameterization::LinearByLinear;
  if (s == "gauss" || s == "gaussian") return Parameterization::Gaussian;
  if (s == "smooth" || s == "smoothness") return Parameterization::Smoothness;
  throw Error("unknown parameterization '" + std::string(s) + "'");
}

inline ModelScope parse_scope(std::string_view s) {
  if (s == "user") return ModelScope::UserOnly;
  if (s == "item") return ModelScope::ItemOnly;
  if (s == "joint") return ModelScope::Joint;
  throw Error("unknown scope '" + std::string(s) + "'");
}

inline bool item_pairs_active(ModelScope s) { return s != ModelScope::ItemOnly; }
inline bool user_pairs_active(ModelScope s) { return s != ModelScope::UserOnly; }

// Decimal form that reads back bit-identically.
inline std::string format_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// splitmix64 finalizer; used to derive independent RNG streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  return mix64(mix64(mix64(mix64(seed) ^ a) ^ b) ^ c);
}

// Portable random stream: the raw engine is specified by the standard, the
// derived draws below are written out so results do not depend on the
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t k = v.size(); k > 1; --k) {
      std::swap(v[k - 1], v[below(k)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace smrf

#endif  // SMRF_COMMON_HPP_

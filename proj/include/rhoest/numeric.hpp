#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rhoest {

/// Raised when an argument falls outside the domain of a parameter or map.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an operation is requested for a family or model it does not
/// cover (e.g. a median-based fit for Bernoulli data).
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// log(1 + e^x)
inline double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// log(log(1 + e^x)); for very negative x, softplus(x) = e^x (1 - e^x/2 + ...).
inline double log_softplus(double x) {
  if (x < -30.0) return x - 0.5 * std::exp(x);
  return std::log(softplus(x));
}

// Inverse of softplus on (0, inf).
inline double softplus_inv(double m) {
  if (m > 30.0) return m + std::log1p(-std::exp(-m));
  return std::log(std::expm1(m));
}

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// splitmix64 finalizer; used to derive independent generator seeds from a
/// master seed and a tuple of counters.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a, stable across platforms (std::hash is not).
inline std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a) {
  return splitmix64(master ^ splitmix64(a));
}

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, Rest... rest) {
  return mix_seed(mix_seed(master, a), static_cast<std::uint64_t>(rest)...);
}

}  // namespace rhoest

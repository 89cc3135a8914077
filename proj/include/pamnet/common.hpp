#ifndef PAMNET_COMMON_HPP_
#define PAMNET_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pamnet {

/// Malformed input file (XYZ, SDF, CSV, JSON config).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Geometry that breaks a downstream assumption (coincident atoms,
/// zero-length angle legs, non-finite coordinates).
class GeometryError : public std::runtime_error {
 public:
  explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Inconsistent configuration (bad cutoffs, missing bonds in bonds mode, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor shape disagreement; message lists both shapes.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value produced by a numeric op or optimizer step.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Deterministic RNG wrapper. std::mt19937_64 is bit-specified by the
/// standard; the sampling helpers below are written out explicitly so that
/// streams do not depend on the standard library's distribution
/// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n) via rejection sampling.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

  /// Standard normal via Box-Muller (no cached second draw, so the stream
  /// stays position-independent).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

constexpr double kPi = 3.14159265358979323846;

}  // namespace pamnet

#endif  // PAMNET_COMMON_HPP_

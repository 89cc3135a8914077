#ifndef PAMNET_BASIS_HPP_
#define PAMNET_BASIS_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "pamnet/common.hpp"

namespace pamnet {

struct BasisConfig {
  int n_radial = 16;          // 16 for the global plex, 6 for the local plex
  int n_spherical = 7;        // angular orders l = 0 .. n_spherical-1
  int envelope_exponent = 5;  // p
  double cutoff = 5.0;        // Angstrom

  void validate() const {
    if (n_radial < 1) throw ConfigError("basis: n_radial must be >= 1");
    if (n_spherical < 1) throw ConfigError("basis: n_spherical must be >= 1");
    if (envelope_exponent < 2) throw ConfigError("basis: envelope exponent must be >= 2");
    if (cutoff <= 0) throw ConfigError("basis: cutoff must be positive");
  }
};

/// Polynomial cutoff window: u(x) = 1 - (p+1)(p+2)/2 x^p + p(p+2) x^(p+1)
/// - p(p+1)/2 x^(p+2) with x = d/cutoff. Both u and u' vanish at d = cutoff.
inline double envelope(double d, double cutoff, int p) {
  if (d >= cutoff) return 0.0;
  const double x = d / cutoff;
  const double pd = static_cast<double>(p);
  const double a = (pd + 1.0) * (pd + 2.0) / 2.0;
  const double b = pd * (pd + 2.0);
  const double c = pd * (pd + 1.0) / 2.0;
  const double xp = std::pow(x, pd);
  return 1.0 - a * xp + b * xp * x - c * xp * x * x;
}

/// Spherical Bessel function of the first kind. Wraps the C++17 special
/// function; j_l(0) is 1 for l = 0 and 0 otherwise.
inline double sph_bessel_j(int l, double x) {
  if (x == 0.0) return l == 0 ? 1.0 : 0.0;
  return std::sph_bessel(static_cast<unsigned>(l), x);
}

namespace detail {

/// n-th positive root (1-based) brackets: roots of j_l interlace those of
/// j_{l-1}, with z_{0,n} = n*pi exactly. Bisection to ~1e-13.
inline std::vector<std::vector<double>> bessel_roots(int l_max, int n_roots) {
  // Level l needs one extra root of level l-1 to bracket its n-th root.
  std::vector<std::vector<double>> roots(static_cast<std::size_t>(l_max) + 1);
  const int n0 = n_roots + l_max;
  roots[0].resize(static_cast<std::size_t>(n0));
  for (int n = 1; n <= n0; ++n) roots[0][static_cast<std::size_t>(n - 1)] = n * kPi;

  for (int l = 1; l <= l_max; ++l) {
    const int count = n0 - l;
    roots[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) {
      double lo = roots[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(n)];
      double hi = roots[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(n + 1)];
      double flo = sph_bessel_j(l, lo);
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = sph_bessel_j(l, mid);
        if ((flo <= 0) == (fmid <= 0)) {
          lo = mid;
          flo = fmid;
        } else {
          hi = mid;
        }
        if (hi - lo < 1e-13) break;
      }
      roots[static_cast<std::size_t>(l)][static_cast<std::size_t>(n)] = 0.5 * (lo + hi);
    }
  }
  return roots;
}

/// Legendre P_l(x) normalized by sqrt((2l+1)/2), orthonormal on [-1, 1].
inline double legendre_normalized(int l, double x) {
  return std::sqrt((2.0 * l + 1.0) / 2.0) * std::legendre(static_cast<unsigned>(l), x);
}

}  // namespace detail

/// Precomputed root table for one basis configuration. Built eagerly and
/// read-only afterwards.
class BasisTables {
 public:
  explicit BasisTables(const BasisConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    roots_ = detail::bessel_roots(cfg.n_spherical - 1, cfg.n_radial);
  }

  const BasisConfig& config() const { return cfg_; }

  /// z_{l,n}, n 1-based.
  double root(int l, int n) const { return roots_[static_cast<std::size_t>(l)][static_cast<std::size_t>(n - 1)]; }

  /// e_n(d) = envelope(d) * sqrt(2/c) * sin(n pi d / c) / d, n = 1..n_radial.
  std::vector<double> radial(double d) const {
    if (d <= 0) throw GeometryError("radial_basis: d must be positive");
    std::vector<double> out(static_cast<std::size_t>(cfg_.n_radial), 0.0);
    if (d >= cfg_.cutoff) return out;
    const double c = cfg_.cutoff;
    const double env = envelope(d, c, cfg_.envelope_exponent);
    const double pref = std::sqrt(2.0 / c) / d;
    for (int n = 1; n <= cfg_.n_radial; ++n)
      out[static_cast<std::size_t>(n - 1)] = env * pref * std::sin(n * kPi * d / c);
    return out;
  }

  /// a_{l,n}(d, theta) = envelope(d) * j_l(z_{l,n} d / c) * sqrt((2l+1)/2) *
  /// P_l(cos theta); flattened with l outer, n inner.
  std::vector<double> angular(double d, double theta) const {
    if (d <= 0) throw GeometryError("angular_basis: d must be positive");
    if (theta < -1e-9 || theta > kPi + 1e-9)
      throw GeometryError("angular_basis: theta outside [0, pi]");
    theta = std::clamp(theta, 0.0, kPi);
    std::vector<double> out(static_cast<std::size_t>(cfg_.n_spherical) * static_cast<std::size_t>(cfg_.n_radial), 0.0);
    if (d >= cfg_.cutoff) return out;
    const double c = cfg_.cutoff;
    const double env = envelope(d, c, cfg_.envelope_exponent);
    const double ct = std::cos(theta);
    for (int l = 0; l < cfg_.n_spherical; ++l) {
      const double leg = detail::legendre_normalized(l, ct);
      for (int n = 1; n <= cfg_.n_radial; ++n) {
        out[static_cast<std::size_t>(l) * static_cast<std::size_t>(cfg_.n_radial) + static_cast<std::size_t>(n - 1)] =
            env * sph_bessel_j(l, root(l, n) * d / c) * leg;
      }
    }
    return out;
  }

  int radial_width() const { return cfg_.n_radial; }
  int angular_width() const { return cfg_.n_spherical * cfg_.n_radial; }

 private:
  BasisConfig cfg_;
  std::vector<std::vector<double>> roots_;
};

}  // namespace pamnet

#endif  // PAMNET_BASIS_HPP_

#ifndef PAMNET_GEOMETRY_HPP_
#define PAMNET_GEOMETRY_HPP_

#include <algorithm>
#include <array>
#include <cmath>

#include "pamnet/common.hpp"
#include "pamnet/structure.hpp"

namespace pamnet {

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline double distance(const Vec3& p, const Vec3& q) { return norm(p - q); }

/// Angle at `vertex` between rays vertex->j and vertex->k, in [0, pi].
/// The cosine is clamped so near-collinear triples cannot produce NaN.
inline double angle(const Vec3& p_j, const Vec3& vertex, const Vec3& p_k) {
  const Vec3 u = p_j - vertex;
  const Vec3 v = p_k - vertex;
  const double nu = norm(u), nv = norm(v);
  if (nu < 1e-12 || nv < 1e-12) throw GeometryError("angle: zero-length leg");
  double c = dot(u, v) / (nu * nv);
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c);
}

/// Rigid-body (plus optional reflection) transform: r -> R*r + t.
struct E3Transform {
  std::array<std::array<double, 3>, 3> rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  Vec3 translation{0, 0, 0};

  Vec3 apply(const Vec3& p) const {
    Vec3 out{};
    for (int r = 0; r < 3; ++r) {
      out[static_cast<std::size_t>(r)] =
          rotation[static_cast<std::size_t>(r)][0] * p[0] +
          rotation[static_cast<std::size_t>(r)][1] * p[1] +
          rotation[static_cast<std::size_t>(r)][2] * p[2] +
          translation[static_cast<std::size_t>(r)];
    }
    return out;
  }

  /// R applied without translation (for checking vector equivariance).
  Vec3 apply_linear(const Vec3& p) const {
    Vec3 out{};
    for (int r = 0; r < 3; ++r) {
      out[static_cast<std::size_t>(r)] = rotation[static_cast<std::size_t>(r)][0] * p[0] +
                                         rotation[static_cast<std::size_t>(r)][1] * p[1] +
                                         rotation[static_cast<std::size_t>(r)][2] * p[2];
    }
    return out;
  }

  double det() const {
    const auto& m = rotation;
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }

  /// Max |R^T R - I| entry; 0 for an exactly orthogonal matrix.
  double orthogonality_defect() const {
    double worst = 0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        double s = 0;
        for (int k = 0; k < 3; ++k)
          s += rotation[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] *
               rotation[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)];
        worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
      }
    }
    return worst;
  }
};

inline Structure apply_transform(const Structure& s, const E3Transform& t) {
  Structure out = s;
  for (auto& p : out.positions) p = t.apply(p);
  return out;
}

/// Rotation uniform over SO(3) via a normalized quaternion of four seeded
/// normal draws, optionally composed with the fixed reflection z -> -z;
/// translation components uniform in [-10, 10] Angstrom.
inline E3Transform random_e3(std::uint64_t seed, bool include_reflection = false) {
  Rng rng(seed);
  double q[4];
  double n2 = 0;
  do {
    n2 = 0;
    for (double& c : q) {
      c = rng.normal();
      n2 += c * c;
    }
  } while (n2 < 1e-12);
  const double inv = 1.0 / std::sqrt(n2);
  const double w = q[0] * inv, x = q[1] * inv, y = q[2] * inv, z = q[3] * inv;

  E3Transform t;
  t.rotation = {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                 {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                 {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
  if (include_reflection) {
    for (int r = 0; r < 3; ++r) t.rotation[static_cast<std::size_t>(r)][2] = -t.rotation[static_cast<std::size_t>(r)][2];
  }
  for (auto& c : t.translation) c = rng.uniform(-10.0, 10.0);
  return t;
}

}  // namespace pamnet

#endif  // PAMNET_GEOMETRY_HPP_

#ifndef PAMNET_SYNTHETIC_HPP_
#define PAMNET_SYNTHETIC_HPP_

#include <string>
#include <vector>

#include "pamnet/common.hpp"
#include "pamnet/geometry.hpp"
#include "pamnet/structure.hpp"

namespace pamnet {

/// Random cluster: n atoms in a cubic box with a minimum separation, light
/// organic elements, and a spanning-chain bond list so bonds-local graphs
/// are well defined.
inline Structure random_structure(std::uint64_t seed, int n_atoms, double box = 4.0,
                                  double min_sep = 0.8) {
  Rng rng(seed);
  static const int kElements[] = {1, 6, 7, 8, 9};
  Structure s;
  s.id = "synthetic-" + std::to_string(seed);
  for (int i = 0; i < n_atoms; ++i) {
    Vec3 p{};
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      p = {rng.uniform(0.0, box), rng.uniform(0.0, box), rng.uniform(0.0, box)};
      ok = true;
      for (const auto& q : s.positions)
        if (distance(p, q) < min_sep) ok = false;
    }
    if (!ok) throw GeometryError("random_structure: cannot place atom with min separation");
    s.positions.push_back(p);
    s.atoms.push_back({kElements[rng.below(5)], {}});
  }
  // Chain bonds 0-1-2-... keep every atom reachable in the local plex.
  for (int i = 0; i + 1 < n_atoms; ++i) s.bonds.emplace_back(i, i + 1);
  return s;
}

/// Uniform-density box without bonds, for neighbor-search and complexity
/// sweeps.
inline Structure uniform_box(std::uint64_t seed, int n_atoms, double box) {
  Rng rng(seed);
  Structure s;
  s.id = "box-" + std::to_string(seed);
  for (int i = 0; i < n_atoms; ++i) {
    bool ok = false;
    Vec3 p{};
    for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
      p = {rng.uniform(0.0, box), rng.uniform(0.0, box), rng.uniform(0.0, box)};
      ok = true;
      for (const auto& q : s.positions)
        if (distance(p, q) < 1e-3) ok = false;
    }
    if (!ok) throw GeometryError("uniform_box: box too dense for the separation floor");
    s.positions.push_back(p);
    s.atoms.push_back({6, {}});
  }
  return s;
}

/// Closed-form geometric target for the overfit smoke test:
/// y = sum over pairs with d_ij <= d_cut of 1 / d_ij.
inline double pairwise_inverse_distance_target(const Structure& s, double d_cut) {
  double y = 0;
  for (int i = 0; i < s.n_atoms(); ++i) {
    for (int j = i + 1; j < s.n_atoms(); ++j) {
      const double d = distance(s.positions[static_cast<std::size_t>(i)],
                                s.positions[static_cast<std::size_t>(j)]);
      if (d <= d_cut) y += 1.0 / d;
    }
  }
  return y;
}

/// The 16-molecule smoke-test set (3 to 6 atoms each) with the closed-form
/// target attached as the label.
inline std::vector<Structure> smoke_dataset(std::uint64_t seed, double d_cut, int count = 16) {
  std::vector<Structure> mols;
  for (int k = 0; k < count; ++k) {
    Structure s = random_structure(seed + static_cast<std::uint64_t>(k) * 101 + 1, 3 + k % 4);
    s.id = "smoke-" + std::to_string(k);
    s.label = std::vector<double>{pairwise_inverse_distance_target(s, d_cut)};
    mols.push_back(std::move(s));
  }
  return mols;
}

}  // namespace pamnet

#endif  // PAMNET_SYNTHETIC_HPP_

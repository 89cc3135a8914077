#ifndef PAMNET_NEIGHBOR_HPP_
#define PAMNET_NEIGHBOR_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "pamnet/geometry.hpp"

namespace pamnet {

enum class NeighborAlgorithm { kBrute, kCellList };

struct NeighborPair {
  int i, j;   // i < j
  double d;   // Euclidean distance in Angstrom
  bool operator==(const NeighborPair&) const = default;
};

namespace detail {

inline void check_pair(int i, int j, double d) {
  if (d < 1e-6)
    throw GeometryError("neighbor_search: atoms " + std::to_string(i) + " and " +
                        std::to_string(j) + " are coincident (d=" + std::to_string(d) + " A)");
}

inline std::vector<NeighborPair> neighbor_brute(const std::vector<Vec3>& pos, double cutoff) {
  std::vector<NeighborPair> out;
  const int n = static_cast<int>(pos.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = distance(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]);
      check_pair(i, j, d);
      if (d <= cutoff) out.push_back({i, j, d});
    }
  }
  return out;
}

/// Cubic cells of side = cutoff over the bounding box, 27-neighborhood scan.
inline std::vector<NeighborPair> neighbor_cell_list(const std::vector<Vec3>& pos, double cutoff) {
  const int n = static_cast<int>(pos.size());
  std::vector<NeighborPair> out;
  if (n < 2) return out;

  Vec3 lo = pos[0], hi = pos[0];
  for (const auto& p : pos) {
    for (int c = 0; c < 3; ++c) {
      lo[static_cast<std::size_t>(c)] = std::min(lo[static_cast<std::size_t>(c)], p[static_cast<std::size_t>(c)]);
      hi[static_cast<std::size_t>(c)] = std::max(hi[static_cast<std::size_t>(c)], p[static_cast<std::size_t>(c)]);
    }
  }
  std::array<int, 3> dims{};
  for (int c = 0; c < 3; ++c) {
    dims[static_cast<std::size_t>(c)] = std::max(
        1, static_cast<int>(std::floor((hi[static_cast<std::size_t>(c)] - lo[static_cast<std::size_t>(c)]) / cutoff)) + 1);
  }
  auto cell_of = [&](const Vec3& p) {
    std::array<int, 3> c{};
    for (int k = 0; k < 3; ++k) {
      int idx = static_cast<int>(std::floor((p[static_cast<std::size_t>(k)] - lo[static_cast<std::size_t>(k)]) / cutoff));
      c[static_cast<std::size_t>(k)] = std::clamp(idx, 0, dims[static_cast<std::size_t>(k)] - 1);
    }
    return c;
  };
  auto flat = [&](const std::array<int, 3>& c) {
    return (c[0] * dims[1] + c[1]) * dims[2] + c[2];
  };

  std::vector<std::vector<int>> cells(static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
                                      static_cast<std::size_t>(dims[2]));
  for (int i = 0; i < n; ++i) cells[static_cast<std::size_t>(flat(cell_of(pos[static_cast<std::size_t>(i)])))].push_back(i);

  for (int i = 0; i < n; ++i) {
    const auto ci = cell_of(pos[static_cast<std::size_t>(i)]);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const std::array<int, 3> cj{ci[0] + dx, ci[1] + dy, ci[2] + dz};
          if (cj[0] < 0 || cj[1] < 0 || cj[2] < 0 || cj[0] >= dims[0] || cj[1] >= dims[1] || cj[2] >= dims[2])
            continue;
          for (int j : cells[static_cast<std::size_t>(flat(cj))]) {
            if (j <= i) continue;
            const double d = distance(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]);
            check_pair(i, j, d);
            if (d <= cutoff) out.push_back({i, j, d});
          }
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const NeighborPair& a, const NeighborPair& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  return out;
}

}  // namespace detail

/// All unordered pairs with distance <= cutoff (inclusive), sorted by
/// (i, j). Both algorithms produce identical output; pairs closer than
/// 1e-6 Angstrom raise a degenerate-geometry error.
inline std::vector<NeighborPair> neighbor_search(const std::vector<Vec3>& positions, double cutoff,
                                                 NeighborAlgorithm algorithm = NeighborAlgorithm::kCellList) {
  if (cutoff <= 0) throw ConfigError("neighbor_search: cutoff must be positive");
  return algorithm == NeighborAlgorithm::kBrute ? detail::neighbor_brute(positions, cutoff)
                                                : detail::neighbor_cell_list(positions, cutoff);
}

}  // namespace pamnet

#endif  // PAMNET_NEIGHBOR_HPP_

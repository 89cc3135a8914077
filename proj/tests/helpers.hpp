#ifndef PAMNET_TESTS_HELPERS_HPP_
#define PAMNET_TESTS_HELPERS_HPP_

#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "pamnet/autodiff.hpp"
#include "pamnet/multiplex_graph.hpp"
#include "pamnet/structure.hpp"

namespace testutil {

inline bool close(double a, double b, double rtol, double atol) {
  return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

/// Central finite difference of eval() w.r.t. one entry of a leaf tensor.
inline double fd_grad(pamnet::ad::Node& leaf, std::size_t idx, const std::function<double()>& eval,
                      double h = 1e-5) {
  const double saved = leaf.val.v[idx];
  leaf.val.v[idx] = saved + h;
  const double up = eval();
  leaf.val.v[idx] = saved - h;
  const double down = eval();
  leaf.val.v[idx] = saved;
  return (up - down) / (2.0 * h);
}

/// Checks every gradient entry of `leaf` against central differences after
/// the caller has run backward(). Returns the worst |ad - fd| scaled error.
inline double max_grad_error(pamnet::ad::Node& leaf, const std::function<double()>& eval,
                             double h = 1e-5) {
  double worst = 0;
  for (std::size_t i = 0; i < leaf.val.numel(); ++i) {
    const double fd = fd_grad(leaf, i, eval, h);
    const double ad = leaf.grad.v[i];
    const double scale = std::max({std::abs(fd), std::abs(ad), 1.0});
    worst = std::max(worst, std::abs(fd - ad) / scale);
  }
  return worst;
}

/// Independent message-count oracle: brute-force enumeration of the index
/// sets straight from positions/adjacency, never touching the graph's own
/// tuple lists.
struct BruteCounts {
  long long global_msgs = 0;
  long long local_base_msgs = 0;
  long long local_angle_msgs = 0;
  long long comparator_msgs = 0;
};

inline BruteCounts brute_counts(const pamnet::Structure& s, double d_local, double d_global,
                                bool bonds_local) {
  const int n = s.n_atoms();
  std::vector<std::vector<bool>> adj_l(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), false));
  std::vector<std::vector<bool>> adj_g(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), false));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = pamnet::distance(s.positions[static_cast<std::size_t>(i)], s.positions[static_cast<std::size_t>(j)]);
      if (d <= d_global) adj_g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
      if (!bonds_local && d <= d_local) adj_l[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
    }
  }
  if (bonds_local) {
    for (const auto& [i, j] : s.bonds) {
      adj_l[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
      adj_l[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = true;
      adj_g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;  // union policy
      adj_g[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = true;
    }
  }

  BruteCounts c;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (adj_g[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) ++c.global_msgs;
      if (adj_l[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) ++c.local_base_msgs;
    }
  }
  // One-hop: directed center edge (j -> i), j' in N(i) \ {j}.
  // Two-hop: k in N(j) \ {i}.
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!adj_l[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) continue;
      for (int jp = 0; jp < n; ++jp)
        if (jp != j && adj_l[static_cast<std::size_t>(jp)][static_cast<std::size_t>(i)]) ++c.local_angle_msgs;
      for (int k = 0; k < n; ++k)
        if (k != i && adj_l[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]) ++c.local_angle_msgs;
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!adj_g[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) continue;
      for (int k = 0; k < n; ++k)
        if (k != i && adj_g[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]) ++c.comparator_msgs;
    }
  }
  return c;
}

}  // namespace testutil

#endif  // PAMNET_TESTS_HELPERS_HPP_

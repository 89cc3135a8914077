#ifndef PAMNET_MULTIPLEX_GRAPH_HPP_
#define PAMNET_MULTIPLEX_GRAPH_HPP_

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "pamnet/geometry.hpp"
#include "pamnet/neighbor.hpp"
#include "pamnet/structure.hpp"

namespace pamnet {

enum class LocalMode { kBonds, kCutoff };

struct GraphConfig {
  LocalMode local_mode = LocalMode::kBonds;
  double d_local = 2.0;   // used iff local_mode == kCutoff
  double d_global = 5.0;
  NeighborAlgorithm neighbor_algorithm = NeighborAlgorithm::kCellList;

  void validate() const {
    if (d_global <= 0) throw ConfigError("graph: d_global must be positive");
    if (local_mode == LocalMode::kCutoff) {
      if (d_local <= 0) throw ConfigError("graph: d_local must be positive");
      if (d_local > d_global) throw ConfigError("graph: d_local must not exceed d_global");
    }
  }
};

/// Directed edge j -> i carrying the message m_ji.
struct DirectedEdge {
  int src;  // j
  int dst;  // i
  double d;
};

/// One angular term of the local message block. For a one-hop tuple the
/// angle sits at the center edge's receiver i between rays i->outer and
/// i->j; for a two-hop tuple it sits at j between j->outer and j->i. In
/// both cases `msg_edge` is the directed local edge whose message feeds the
/// sum and `d_outer` is that edge's length (it parameterizes the radial
/// part of the angular basis).
struct AngleTuple {
  int outer;        // j' (one-hop) or k (two-hop)
  int vertex;       // i (one-hop) or j (two-hop)
  int other;        // j (one-hop) or i (two-hop)
  int center_edge;  // index of directed edge (j -> i) in local_edges
  int msg_edge;     // index of directed edge (j' -> i) or (k -> j)
  double theta;     // radians in [0, pi]
  double d_outer;
};

struct MessageCounts {
  std::int64_t global_msgs = 0;
  std::int64_t local_base_msgs = 0;
  std::int64_t local_angle_msgs = 0;
  std::int64_t total() const { return global_msgs + local_base_msgs + local_angle_msgs; }
  bool operator==(const MessageCounts&) const = default;
};

/// Two-layer multiplex graph over one node set: a local plex (bonds or a
/// small cutoff) with precomputed angle tuples, and a global plex (large
/// cutoff). Undirected neighbor pairs are stored as two directed edges.
struct MultiplexGraph {
  int n_nodes = 0;
  std::vector<DirectedEdge> local_edges;
  std::vector<DirectedEdge> global_edges;
  std::vector<AngleTuple> onehop_angles;
  std::vector<AngleTuple> twohop_angles;

  std::vector<std::vector<int>> local_adjacency;  // sorted neighbor lists

  MessageCounts count_messages() const {
    return {static_cast<std::int64_t>(global_edges.size()),
            static_cast<std::int64_t>(local_edges.size()),
            static_cast<std::int64_t>(onehop_angles.size() + twohop_angles.size())};
  }

  /// Directed-edge count over node count, per plex: (k_g, k_l).
  std::pair<double, double> average_degree() const {
    if (n_nodes <= 0) throw ConfigError("average_degree: empty graph");
    return {static_cast<double>(global_edges.size()) / n_nodes,
            static_cast<double>(local_edges.size()) / n_nodes};
  }

  /// Single-plex comparator: sum over directed global edges (j,i) of
  /// |N_g(j) \ {i}|, the O(N k_g^2) message count of angle-aware models
  /// that work on one full-cutoff graph.
  std::int64_t dimenet_style_msgs() const {
    std::vector<std::int64_t> deg(static_cast<std::size_t>(n_nodes), 0);
    for (const auto& e : global_edges) ++deg[static_cast<std::size_t>(e.dst)];
    std::int64_t total = 0;
    for (const auto& e : global_edges) total += deg[static_cast<std::size_t>(e.src)] - 1;
    return total;
  }
};

namespace detail {

inline std::vector<DirectedEdge> to_directed(const std::vector<NeighborPair>& pairs) {
  // Both orientations of every undirected pair, sorted by (src, dst).
  std::vector<DirectedEdge> edges;
  edges.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    edges.push_back({p.i, p.j, p.d});
    edges.push_back({p.j, p.i, p.d});
  }
  std::sort(edges.begin(), edges.end(), [](const DirectedEdge& a, const DirectedEdge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  return edges;
}

}  // namespace detail

/// Builds the multiplex graph: neighbor search (or bond list) for each
/// plex, directed edge lists, and the one-hop/two-hop angle tuples the
/// local message block sums over. In bonds mode the global plex is the
/// union of the cutoff neighborhood and the bond list, so local edges are
/// always a subset of global ones.
inline MultiplexGraph build_multiplex(const Structure& s, const GraphConfig& cfg) {
  cfg.validate();
  s.validate();
  const int n = s.n_atoms();

  MultiplexGraph g;
  g.n_nodes = n;

  auto global_pairs = neighbor_search(s.positions, cfg.d_global, cfg.neighbor_algorithm);

  std::vector<NeighborPair> local_pairs;
  if (cfg.local_mode == LocalMode::kBonds) {
    if (s.bonds.empty() && n > 1)
      throw ConfigError("build_multiplex: local_mode=bonds but structure '" + s.id + "' has no bonds");
    for (const auto& [i, j] : s.bonds) {
      const double d = distance(s.positions[static_cast<std::size_t>(i)], s.positions[static_cast<std::size_t>(j)]);
      if (d < 1e-6)
        throw GeometryError("build_multiplex: bonded atoms " + std::to_string(i) + "," +
                            std::to_string(j) + " are coincident");
      local_pairs.push_back({std::min(i, j), std::max(i, j), d});
    }
    std::sort(local_pairs.begin(), local_pairs.end(), [](const NeighborPair& a, const NeighborPair& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    // Bonded pairs beyond d_global still belong to the global plex.
    std::vector<NeighborPair> merged = global_pairs;
    for (const auto& p : local_pairs) {
      bool present = std::any_of(global_pairs.begin(), global_pairs.end(),
                                 [&](const NeighborPair& q) { return q.i == p.i && q.j == p.j; });
      if (!present) merged.push_back(p);
    }
    std::sort(merged.begin(), merged.end(), [](const NeighborPair& a, const NeighborPair& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    global_pairs = std::move(merged);
  } else {
    local_pairs = neighbor_search(s.positions, cfg.d_local, cfg.neighbor_algorithm);
  }

  g.global_edges = detail::to_directed(global_pairs);
  g.local_edges = detail::to_directed(local_pairs);

  g.local_adjacency.assign(static_cast<std::size_t>(n), {});
  for (const auto& p : local_pairs) {
    g.local_adjacency[static_cast<std::size_t>(p.i)].push_back(p.j);
    g.local_adjacency[static_cast<std::size_t>(p.j)].push_back(p.i);
  }
  for (auto& adj : g.local_adjacency) std::sort(adj.begin(), adj.end());

  // Directed-edge index lookup for the local plex.
  std::vector<std::vector<std::pair<int, int>>> edge_index(static_cast<std::size_t>(n));
  for (int e = 0; e < static_cast<int>(g.local_edges.size()); ++e) {
    const auto& ed = g.local_edges[static_cast<std::size_t>(e)];
    edge_index[static_cast<std::size_t>(ed.src)].push_back({ed.dst, e});
  }
  auto find_edge = [&](int src, int dst) {
    for (const auto& [d, e] : edge_index[static_cast<std::size_t>(src)])
      if (d == dst) return e;
    throw ConfigError("build_multiplex: internal edge lookup failure");
  };

  // Angle tuples, enumerated per directed center edge (j -> i).
  for (int ce = 0; ce < static_cast<int>(g.local_edges.size()); ++ce) {
    const auto& edge = g.local_edges[static_cast<std::size_t>(ce)];
    const int j = edge.src, i = edge.dst;
    // One-hop: j' in N(i) \ {j}; angle at vertex i.
    for (int jp : g.local_adjacency[static_cast<std::size_t>(i)]) {
      if (jp == j) continue;
      const int me = find_edge(jp, i);
      const double theta = angle(s.positions[static_cast<std::size_t>(jp)], s.positions[static_cast<std::size_t>(i)],
                                 s.positions[static_cast<std::size_t>(j)]);
      g.onehop_angles.push_back({jp, i, j, ce, me, theta, g.local_edges[static_cast<std::size_t>(me)].d});
    }
    // Two-hop: k in N(j) \ {i}; angle at vertex j.
    for (int k : g.local_adjacency[static_cast<std::size_t>(j)]) {
      if (k == i) continue;
      const int me = find_edge(k, j);
      const double theta = angle(s.positions[static_cast<std::size_t>(k)], s.positions[static_cast<std::size_t>(j)],
                                 s.positions[static_cast<std::size_t>(i)]);
      g.twohop_angles.push_back({k, j, i, ce, me, theta, g.local_edges[static_cast<std::size_t>(me)].d});
    }
  }
  return g;
}

}  // namespace pamnet

#endif  // PAMNET_MULTIPLEX_GRAPH_HPP_

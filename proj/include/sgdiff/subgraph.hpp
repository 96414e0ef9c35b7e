// Copyright 2026 The sgdiff Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SGDIFF_SUBGRAPH_HPP
#define SGDIFF_SUBGRAPH_HPP

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "sgdiff/errors.hpp"
#include "sgdiff/graph.hpp"
#include "sgdiff/random.hpp"

namespace sgdiff {

using Adjacency = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

struct ExtractionConfig {
  int hops = 1;           // k
  int max_per_hop = -1;   // ns; -1 keeps every newly reached node
  int max_nodes = 64;
  std::uint64_t seed = 0;
  int drnl_classes = 16;  // vocabulary size for the categorical diffusion

  void validate() const;
};

/// One link sample: the k-hop node-induced subgraph around (u, v) with the
/// target edge removed. Node 0 is u and node 1 is v.
struct EnclosingSubgraph {
  std::vector<NodeId> node_map;
  Adjacency adj;
  std::vector<int> drnl;  // raw labels, not clamped
  std::optional<Eigen::MatrixXd> features;
  int y = 0;

  int size() const { return static_cast<int>(node_map.size()); }
};

/// Anything that can enumerate neighbors; Graph satisfies it, and tests wrap
/// it to log which adjacency lists extraction touches.
template <typename G>
concept NeighborSource = requires(const G& g, NodeId u) {
  { g.num_nodes() } -> std::convertible_to<std::size_t>;
  { g.neighbors(u) };
};

/// DRNL hash of a pair of finite center distances (both >= 1).
inline int drnl_hash(int du, int dv) {
  const int d = du + dv;
  const int half = d / 2;
  return 1 + std::min(du, dv) + half * (half + d % 2 - 1);
}

/// Label clamped into [0, classes): overflow maps to the last class.
inline int clamp_drnl(int label, int classes) {
  return std::min(label, classes - 1);
}

namespace detail {

// BFS distances from `source` over a dense 0/1 adjacency with node `blocked`
// removed. Unreachable nodes get -1.
template <typename Derived>
void bfs_distances(const Eigen::MatrixBase<Derived>& adj, int source,
                   int blocked, std::span<int> dist, std::span<int> queue) {
  const int n = static_cast<int>(adj.rows());
  std::fill(dist.begin(), dist.begin() + n, -1);
  dist[source] = 0;
  int head = 0;
  int tail = 0;
  queue[tail++] = source;
  while (head < tail) {
    const int a = queue[head++];
    for (int b = 0; b < n; ++b) {
      if (b == blocked || dist[b] >= 0 || adj(a, b) == 0) continue;
      dist[b] = dist[a] + 1;
      queue[tail++] = b;
    }
  }
}

}  // namespace detail

/// DRNL labels for a target-masked adjacency whose centers are nodes 0 and 1.
/// Distances to one center are taken with the other center removed; centers
/// get 1, nodes unreachable from either center get 0.
template <typename Derived>
void drnl_labels(const Eigen::MatrixBase<Derived>& adj, std::span<int> out) {
  const int n = static_cast<int>(adj.rows());
  constexpr int kStack = 16;
  int stack_buf[3 * kStack];
  std::vector<int> heap_buf;
  int* buf = stack_buf;
  if (n > kStack) {
    heap_buf.resize(3 * static_cast<std::size_t>(n));
    buf = heap_buf.data();
  }
  std::span<int> du(buf, n);
  std::span<int> dv(buf + n, n);
  std::span<int> queue(buf + 2 * n, n);
  detail::bfs_distances(adj, 0, 1, du, queue);
  detail::bfs_distances(adj, 1, 0, dv, queue);
  out[0] = 1;
  if (n > 1) out[1] = 1;
  for (int i = 2; i < n; ++i) {
    out[i] = (du[i] < 0 || dv[i] < 0) ? 0 : drnl_hash(du[i], dv[i]);
  }
}

std::vector<int> drnl_label(const EnclosingSubgraph& sub);

/// Extracts the enclosing subgraph of (u, v). Each hop keeps at most
/// `max_per_hop` uniformly sampled newly reached nodes; when the total exceeds
/// `max_nodes` the most recently discovered nodes are dropped.
template <NeighborSource G>
EnclosingSubgraph extract(const G& g, NodeId u, NodeId v, int y,
                          const ExtractionConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<NodeId>(g.num_nodes());
  if (u == v) throw ArgumentError("extract: u and v must differ");
  if (u < 0 || v < 0 || u >= n || v >= n) {
    throw IndexError("extract: pair (" + std::to_string(u) + ", " +
                     std::to_string(v) + ") out of range");
  }
  if (y != 0 && y != 1) throw ArgumentError("extract: y must be 0 or 1");

  Rng rng(cfg.seed);
  std::vector<NodeId> visited{u, v};
  std::unordered_map<NodeId, int> position{{u, 0}, {v, 1}};
  std::vector<NodeId> frontier{u, v};
  for (int hop = 0; hop < cfg.hops && !frontier.empty(); ++hop) {
    std::vector<NodeId> fringe;
    for (NodeId a : frontier) {
      for (NodeId b : g.neighbors(a)) {
        if (position.count(b)) continue;
        position.emplace(b, -1);
        fringe.push_back(b);
      }
    }
    if (cfg.max_per_hop >= 0 &&
        fringe.size() > static_cast<std::size_t>(cfg.max_per_hop)) {
      std::shuffle(fringe.begin(), fringe.end(), rng);
      for (std::size_t i = cfg.max_per_hop; i < fringe.size(); ++i) {
        position.erase(fringe[i]);
      }
      fringe.resize(cfg.max_per_hop);
      std::sort(fringe.begin(), fringe.end());
    }
    for (NodeId b : fringe) {
      position[b] = static_cast<int>(visited.size());
      visited.push_back(b);
    }
    frontier = std::move(fringe);
  }
  if (visited.size() > static_cast<std::size_t>(cfg.max_nodes)) {
    for (std::size_t i = cfg.max_nodes; i < visited.size(); ++i) {
      position.erase(visited[i]);
    }
    visited.resize(cfg.max_nodes);
  }

  EnclosingSubgraph sub;
  const int size = static_cast<int>(visited.size());
  sub.adj = Adjacency::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    for (NodeId b : g.neighbors(visited[i])) {
      const auto it = position.find(b);
      if (it == position.end() || it->second < 0) continue;
      sub.adj(i, it->second) = 1;
      sub.adj(it->second, i) = 1;
    }
  }
  sub.adj(0, 1) = 0;
  sub.adj(1, 0) = 0;
  sub.node_map = std::move(visited);
  sub.y = y;
  sub.drnl.assign(size, 0);
  drnl_labels(sub.adj, std::span<int>(sub.drnl));

  if constexpr (requires { g.has_features(); g.features(); }) {
    if (g.has_features()) {
      const auto& x = g.features();
      Eigen::MatrixXd f(size, x.cols());
      for (int i = 0; i < size; ++i) f.row(i) = x.row(sub.node_map[i]);
      sub.features = std::move(f);
    }
  }
  return sub;
}

struct LabeledPair {
  NodeId u = 0;
  NodeId v = 0;
  int y = 0;
};

/// One subgraph per pair, in input order. Pair i is extracted with seed
/// derive_seed(cfg.seed, i).
std::vector<EnclosingSubgraph> build_sample_set(
    const Graph& g, std::span<const LabeledPair> pairs,
    const ExtractionConfig& cfg);

/// Convenience: positives labeled 1 followed by negatives labeled 0.
std::vector<LabeledPair> label_pairs(std::span<const NodePair> positives,
                                     std::span<const NodePair> negatives);

/// Text dump used for debugging and oracle fixtures:
///   SUBGRAPH y=<y> n=<n>
///   NODES <ids...>
///   DRNL <labels...>
///   <n adjacency rows of 0/1>
///   END
void write_subgraph(std::ostream& os, const EnclosingSubgraph& sub);
EnclosingSubgraph read_subgraph(std::istream& is);

}  // namespace sgdiff

#endif  // SGDIFF_SUBGRAPH_HPP

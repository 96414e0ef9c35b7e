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

#ifndef SGDIFF_GRAPH_HPP
#define SGDIFF_GRAPH_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sgdiff {

using NodeId = std::int64_t;

/// Undirected node pair. Graph edges are always stored canonically (u < v);
/// query pairs keep their orientation because the first endpoint becomes
/// subgraph node 0.
struct NodePair {
  NodeId u = 0;
  NodeId v = 0;

  NodePair canonical() const { return u < v ? *this : NodePair{v, u}; }
  auto operator<=>(const NodePair&) const = default;
};

/// Immutable undirected simple graph with a CSR neighbor index and optional
/// dense node features.
class Graph {
 public:
  Graph() = default;

  /// Builds from an arbitrary pair list: pairs are canonicalized and
  /// deduplicated. Self-loops and out-of-range endpoints throw.
  Graph(std::size_t num_nodes, std::vector<NodePair> edges,
        std::optional<Eigen::MatrixXd> features = std::nullopt);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }

  /// Sorted canonical edge list.
  const std::vector<NodePair>& edges() const { return edges_; }

  /// Sorted neighbor ids of `u`.
  std::span<const NodeId> neighbors(NodeId u) const {
    return {targets_.data() + offsets_[u],
            targets_.data() + offsets_[u + 1]};
  }

  std::size_t degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }

  bool has_edge(NodeId u, NodeId v) const;

  bool has_features() const { return features_.has_value(); }
  const Eigen::MatrixXd& features() const;
  std::optional<std::size_t> feature_dim() const;

  /// Same node set and features, different edge set.
  Graph with_edges(std::vector<NodePair> edges) const;

  /// Same edges, features replaced (or dropped with nullopt).
  Graph with_features(std::optional<Eigen::MatrixXd> features) const;

  /// Full rescan of the neighbor index against the edge list.
  bool index_consistent() const;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<NodePair> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> targets_;
  std::optional<Eigen::MatrixXd> features_;
};

/// Reads a whitespace separated "u v" edge list (0-indexed; '#' lines and
/// blank lines ignored) and an optional feature file with one row of reals
/// per node. Self-loops are dropped with a warning on stderr.
///
/// When a feature file is given its row count fixes the node count, and any
/// edge endpoint beyond it is an IndexError. `num_nodes` does the same for
/// featureless graphs; otherwise the node count is max id + 1.
Graph load_graph(const std::filesystem::path& edge_path,
                 const std::optional<std::filesystem::path>& feature_path = {},
                 std::optional<std::size_t> num_nodes = {});

void save_edges(const Graph& g, const std::filesystem::path& path);
void save_features(const Graph& g, const std::filesystem::path& path);

struct EdgeSplit {
  std::vector<NodePair> train_pos;
  std::vector<NodePair> valid_pos;
  std::vector<NodePair> test_pos;
  std::vector<NodePair> train_neg;
  std::vector<NodePair> valid_neg;
  std::vector<NodePair> test_neg;
};

struct SplitFractions {
  double train = 0.80;
  double valid = 0.05;
  double test = 0.15;
};

/// Random 80/5/15 (by default) partition of the edge set with matched
/// negatives. Train and valid sizes are floored; test takes the remainder.
/// All negative lists are mutually disjoint and disjoint from the edge set.
EdgeSplit split_edges(const Graph& g, SplitFractions fractions,
                      std::uint64_t seed);

/// Samples `count` distinct non-edges u<v of `g` that are also not in
/// `exclude`. Throws SamplingExhausted when not enough exist.
std::vector<NodePair> sample_non_edges(const Graph& g, std::size_t count,
                                       std::uint64_t seed,
                                       std::span<const NodePair> exclude = {});

/// Removes floor(budget * e) uniformly chosen edges and adds as many
/// uniformly chosen non-edges of the original graph. Returns a new graph.
Graph random_flip_attack(const Graph& g, double budget_fraction,
                         std::uint64_t seed);

/// Split manifest: section headers (TRAIN_POS, TRAIN_NEG, VALID_POS,
/// VALID_NEG, TEST_POS, TEST_NEG) each followed by "u v" lines.
void write_split_manifest(const EdgeSplit& split,
                          const std::filesystem::path& path);
EdgeSplit read_split_manifest(const std::filesystem::path& path);

}  // namespace sgdiff

#endif  // SGDIFF_GRAPH_HPP

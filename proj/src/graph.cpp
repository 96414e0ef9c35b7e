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

#include "sgdiff/graph.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_set>

#include "sgdiff/errors.hpp"
#include "sgdiff/random.hpp"

namespace sgdiff {
namespace {

std::uint64_t pair_key(NodePair p) {
  const NodePair c = p.canonical();
  return (static_cast<std::uint64_t>(c.u) << 32) |
         static_cast<std::uint64_t>(c.v);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool skippable(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

// Parses exactly two non-negative integers from a line.
bool parse_pair(std::string_view line, NodeId& u, NodeId& v) {
  const char* p = line.data();
  const char* end = line.data() + line.size();
  auto skip_ws = [&] {
    while (p < end && (*p == ' ' || *p == '\t' || *p == ',' || *p == '\r'))
      ++p;
  };
  skip_ws();
  auto r = std::from_chars(p, end, u);
  if (r.ec != std::errc{} || u < 0) return false;
  p = r.ptr;
  skip_ws();
  r = std::from_chars(p, end, v);
  if (r.ec != std::errc{} || v < 0) return false;
  p = r.ptr;
  skip_ws();
  return p == end;
}

std::vector<double> parse_reals(const std::string& line, std::size_t lineno) {
  std::vector<double> row;
  const char* p = line.c_str();
  while (true) {
    while (*p == ' ' || *p == '\t' || *p == ',' || *p == '\r') ++p;
    if (*p == '\0' || *p == '\n') break;
    char* next = nullptr;
    errno = 0;
    const double x = std::strtod(p, &next);
    if (next == p || errno == ERANGE) {
      throw ParseError("malformed real in feature file", lineno);
    }
    row.push_back(x);
    p = next;
  }
  return row;
}

}  // namespace

Graph::Graph(std::size_t num_nodes, std::vector<NodePair> edges,
             std::optional<Eigen::MatrixXd> features)
    : num_nodes_(num_nodes), features_(std::move(features)) {
  for (auto& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= num_nodes ||
        static_cast<std::size_t>(e.v) >= num_nodes) {
      throw IndexError("edge (" + std::to_string(e.u) + ", " +
                       std::to_string(e.v) + ") out of range for " +
                       std::to_string(num_nodes) + " nodes");
    }
    if (e.u == e.v) {
      throw ArgumentError("self-loop on node " + std::to_string(e.u));
    }
    e = e.canonical();
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  if (features_ && static_cast<std::size_t>(features_->rows()) != num_nodes) {
    throw DimensionError("feature rows (" + std::to_string(features_->rows()) +
                         ") != num_nodes (" + std::to_string(num_nodes) + ")");
  }

  offsets_.assign(num_nodes + 1, 0);
  for (const auto& e : edges_) {
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  targets_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    targets_[cursor[e.u]++] = e.v;
    targets_[cursor[e.v]++] = e.u;
  }
  for (std::size_t u = 0; u < num_nodes; ++u) {
    std::sort(targets_.begin() + offsets_[u], targets_.begin() + offsets_[u + 1]);
  }
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= num_nodes_ ||
      static_cast<std::size_t>(v) >= num_nodes_) {
    return false;
  }
  if (degree(u) > degree(v)) std::swap(u, v);
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

const Eigen::MatrixXd& Graph::features() const {
  if (!features_) throw StateError("graph has no node features");
  return *features_;
}

std::optional<std::size_t> Graph::feature_dim() const {
  if (!features_) return std::nullopt;
  return static_cast<std::size_t>(features_->cols());
}

Graph Graph::with_edges(std::vector<NodePair> edges) const {
  return Graph(num_nodes_, std::move(edges), features_);
}

Graph Graph::with_features(std::optional<Eigen::MatrixXd> features) const {
  return Graph(num_nodes_, edges_, std::move(features));
}

bool Graph::index_consistent() const {
  std::vector<NodePair> rebuilt;
  for (std::size_t u = 0; u < num_nodes_; ++u) {
    const auto nb = neighbors(static_cast<NodeId>(u));
    if (!std::is_sorted(nb.begin(), nb.end())) return false;
    for (NodeId v : nb) {
      if (v == static_cast<NodeId>(u)) return false;
      if (static_cast<NodeId>(u) < v) rebuilt.push_back({static_cast<NodeId>(u), v});
      else if (!has_edge(v, static_cast<NodeId>(u))) return false;
    }
  }
  return rebuilt == edges_;
}

Graph load_graph(const std::filesystem::path& edge_path,
                 const std::optional<std::filesystem::path>& feature_path,
                 std::optional<std::size_t> num_nodes) {
  std::ifstream in(edge_path);
  if (!in) throw IoError("cannot open edge file: " + edge_path.string());

  std::vector<NodePair> pairs;
  std::string line;
  std::size_t lineno = 0;
  std::size_t self_loops = 0;
  NodeId max_id = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    NodeId u = 0;
    NodeId v = 0;
    if (!parse_pair(trim(line), u, v)) {
      throw ParseError("expected \"u v\" in " + edge_path.string(), lineno);
    }
    if (u == v) {
      ++self_loops;
      continue;
    }
    max_id = std::max({max_id, u, v});
    pairs.push_back({u, v});
  }
  if (pairs.empty()) throw ArgumentError("no edges in " + edge_path.string());
  if (self_loops > 0) {
    std::cerr << "warning: dropped " << self_loops << " self-loop(s) from "
              << edge_path.string() << '\n';
  }

  std::optional<Eigen::MatrixXd> features;
  if (feature_path) {
    std::ifstream fin(*feature_path);
    if (!fin) throw IoError("cannot open feature file: " + feature_path->string());
    std::vector<std::vector<double>> rows;
    lineno = 0;
    while (std::getline(fin, line)) {
      ++lineno;
      if (skippable(line)) continue;
      rows.push_back(parse_reals(line, lineno));
      if (rows.back().size() != rows.front().size()) {
        throw DimensionError("ragged feature file " + feature_path->string() +
                             " at line " + std::to_string(lineno));
      }
    }
    if (rows.empty()) throw ArgumentError("empty feature file");
    if (num_nodes && *num_nodes != rows.size()) {
      throw DimensionError("feature file has " + std::to_string(rows.size()) +
                           " rows but " + std::to_string(*num_nodes) +
                           " nodes were declared");
    }
    Eigen::MatrixXd x(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) x(i, j) = rows[i][j];
    }
    num_nodes = rows.size();
    features = std::move(x);
  }

  const std::size_t n = num_nodes ? *num_nodes : static_cast<std::size_t>(max_id + 1);
  if (static_cast<std::size_t>(max_id) >= n) {
    if (features) {
      throw DimensionError("edge endpoint " + std::to_string(max_id) +
                           " has no feature row (" + std::to_string(n) +
                           " rows)");
    }
    throw IndexError("node id " + std::to_string(max_id) +
                     " exceeds declared node count " + std::to_string(n));
  }
  return Graph(n, std::move(pairs), std::move(features));
}

void save_edges(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

void save_features(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  const auto& x = g.features();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) out << ' ';
      out << x(i, j);
    }
    out << '\n';
  }
}

std::vector<NodePair> sample_non_edges(const Graph& g, std::size_t count,
                                       std::uint64_t seed,
                                       std::span<const NodePair> exclude) {
  const std::size_t n = g.num_nodes();
  std::unordered_set<std::uint64_t> taken;
  taken.reserve(2 * (exclude.size() + count));
  for (const auto& p : exclude) taken.insert(pair_key(p));

  std::size_t excluded_non_edges = 0;
  for (std::uint64_t k : taken) {
    const NodeId u = static_cast<NodeId>(k >> 32);
    const NodeId v = static_cast<NodeId>(k & 0xffffffffULL);
    if (u != v && !g.has_edge(u, v)) ++excluded_non_edges;
  }
  const std::size_t total_pairs = n < 2 ? 0 : n * (n - 1) / 2;
  const std::size_t available = total_pairs - g.num_edges() - excluded_non_edges;
  if (count > available) {
    throw SamplingExhausted("need " + std::to_string(count) +
                            " non-edges but only " + std::to_string(available) +
                            " are available");
  }

  Rng rng(seed);
  std::vector<NodePair> out;
  out.reserve(count);
  if (count == 0) return out;

  if (count * 2 <= available) {
    std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n) - 1);
    while (out.size() < count) {
      NodePair p{pick(rng), pick(rng)};
      if (p.u == p.v) continue;
      p = p.canonical();
      if (g.has_edge(p.u, p.v)) continue;
      if (!taken.insert(pair_key(p)).second) continue;
      out.push_back(p);
    }
    return out;
  }

  // Dense regime: enumerate and take a uniform prefix of a shuffle.
  std::vector<NodePair> pool;
  pool.reserve(available);
  for (NodeId u = 0; u < static_cast<NodeId>(n); ++u) {
    for (NodeId v = u + 1; v < static_cast<NodeId>(n); ++v) {
      if (!g.has_edge(u, v) && !taken.count(pair_key({u, v}))) pool.push_back({u, v});
    }
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(count);
  return pool;
}

EdgeSplit split_edges(const Graph& g, SplitFractions fractions,
                      std::uint64_t seed) {
  const double total = fractions.train + fractions.valid + fractions.test;
  if (std::abs(total - 1.0) > 1e-9 || fractions.train < 0 ||
      fractions.valid < 0 || fractions.test < 0) {
    throw ArgumentError("split fractions must be non-negative and sum to 1");
  }
  const std::size_t e = g.num_edges();
  if (e < 3) throw ArgumentError("split_edges needs at least 3 edges");

  std::vector<NodePair> edges = g.edges();
  Rng rng(derive_seed(seed, 0));
  std::shuffle(edges.begin(), edges.end(), rng);

  const auto n_train = static_cast<std::size_t>(std::floor(fractions.train * e + 1e-9));
  const auto n_valid = static_cast<std::size_t>(std::floor(fractions.valid * e + 1e-9));
  EdgeSplit split;
  split.train_pos.assign(edges.begin(), edges.begin() + n_train);
  split.valid_pos.assign(edges.begin() + n_train, edges.begin() + n_train + n_valid);
  split.test_pos.assign(edges.begin() + n_train + n_valid, edges.end());

  const std::size_t n_test = split.test_pos.size();
  auto negatives = sample_non_edges(g, n_train + n_valid + n_test, derive_seed(seed, 1));
  split.train_neg.assign(negatives.begin(), negatives.begin() + n_train);
  split.valid_neg.assign(negatives.begin() + n_train,
                         negatives.begin() + n_train + n_valid);
  split.test_neg.assign(negatives.begin() + n_train + n_valid, negatives.end());
  return split;
}

Graph random_flip_attack(const Graph& g, double budget_fraction,
                         std::uint64_t seed) {
  if (!(budget_fraction > 0.0) || budget_fraction > 1.0) {
    throw ArgumentError("flip budget must lie in (0, 1]");
  }
  const auto flips = static_cast<std::size_t>(
      std::floor(budget_fraction * static_cast<double>(g.num_edges()) + 1e-9));
  if (flips < 1) {
    throw ArgumentError("flip budget selects no edges (budget * |E| < 1)");
  }
  std::vector<NodePair> edges = g.edges();
  Rng rng(derive_seed(seed, 0));
  std::shuffle(edges.begin(), edges.end(), rng);
  edges.erase(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(flips));

  const auto added = sample_non_edges(g, flips, derive_seed(seed, 1));
  edges.insert(edges.end(), added.begin(), added.end());
  return g.with_edges(std::move(edges));
}

namespace {
constexpr std::array<const char*, 6> kSections = {
    "TRAIN_POS", "TRAIN_NEG", "VALID_POS", "VALID_NEG", "TEST_POS", "TEST_NEG"};

std::array<std::vector<NodePair>*, 6> sections(EdgeSplit& s) {
  return {&s.train_pos, &s.train_neg, &s.valid_pos,
          &s.valid_neg, &s.test_pos,  &s.test_neg};
}
}  // namespace

void write_split_manifest(const EdgeSplit& split,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  auto lists = sections(const_cast<EdgeSplit&>(split));
  for (std::size_t i = 0; i < kSections.size(); ++i) {
    out << kSections[i] << '\n';
    for (const auto& p : *lists[i]) out << p.u << ' ' << p.v << '\n';
  }
}

EdgeSplit read_split_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open split manifest: " + path.string());
  EdgeSplit split;
  auto lists = sections(split);
  std::vector<NodePair>* current = nullptr;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto t = trim(line);
    const auto it = std::find(kSections.begin(), kSections.end(), t);
    if (it != kSections.end()) {
      current = lists[it - kSections.begin()];
      continue;
    }
    NodePair p;
    if (current == nullptr || !parse_pair(t, p.u, p.v)) {
      throw ParseError("malformed split manifest " + path.string(), lineno);
    }
    current->push_back(p);
  }
  return split;
}

}  // namespace sgdiff

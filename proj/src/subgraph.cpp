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

#include "sgdiff/subgraph.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace sgdiff {

void ExtractionConfig::validate() const {
  if (hops < 1) throw ArgumentError("k (hops) must be >= 1");
  if (max_per_hop != -1 && max_per_hop < 1) {
    throw ArgumentError("ns must be -1 or >= 1");
  }
  if (max_nodes < 2) throw ArgumentError("max_nodes must be >= 2");
  if (drnl_classes < 2) throw ArgumentError("drnl_classes must be >= 2");
}

std::vector<int> drnl_label(const EnclosingSubgraph& sub) {
  std::vector<int> out(sub.size(), 0);
  drnl_labels(sub.adj, std::span<int>(out));
  return out;
}

std::vector<EnclosingSubgraph> build_sample_set(
    const Graph& g, std::span<const LabeledPair> pairs,
    const ExtractionConfig& cfg) {
  std::vector<EnclosingSubgraph> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ExtractionConfig c = cfg;
    c.seed = derive_seed(cfg.seed, i);
    try {
      out.push_back(extract(g, pairs[i].u, pairs[i].v, pairs[i].y, c));
    } catch (const IndexError& e) {
      throw IndexError("pair #" + std::to_string(i) + ": " + e.what());
    } catch (const ArgumentError& e) {
      throw ArgumentError("pair #" + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<LabeledPair> label_pairs(std::span<const NodePair> positives,
                                     std::span<const NodePair> negatives) {
  std::vector<LabeledPair> out;
  out.reserve(positives.size() + negatives.size());
  for (const auto& p : positives) out.push_back({p.u, p.v, 1});
  for (const auto& p : negatives) out.push_back({p.u, p.v, 0});
  return out;
}

void write_subgraph(std::ostream& os, const EnclosingSubgraph& sub) {
  const int n = sub.size();
  os << "SUBGRAPH y=" << sub.y << " n=" << n << '\n' << "NODES";
  for (NodeId id : sub.node_map) os << ' ' << id;
  os << "\nDRNL";
  for (int l : sub.drnl) os << ' ' << l;
  os << '\n';
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) os << (j ? " " : "") << sub.adj(i, j);
    os << '\n';
  }
  os << "END\n";
}

EnclosingSubgraph read_subgraph(std::istream& is) {
  std::string line;
  auto next_line = [&]() -> std::istringstream {
    if (!std::getline(is, line)) throw IoError("truncated subgraph dump");
    return std::istringstream(line);
  };
  EnclosingSubgraph sub;
  int n = 0;
  {
    auto ss = next_line();
    std::string tag;
    std::string ytok;
    std::string ntok;
    ss >> tag >> ytok >> ntok;
    if (tag != "SUBGRAPH" || ytok.rfind("y=", 0) != 0 || ntok.rfind("n=", 0) != 0) {
      throw IoError("bad subgraph header: " + line);
    }
    sub.y = std::stoi(ytok.substr(2));
    n = std::stoi(ntok.substr(2));
  }
  {
    auto ss = next_line();
    std::string tag;
    ss >> tag;
    if (tag != "NODES") throw IoError("expected NODES");
    NodeId id = 0;
    while (ss >> id) sub.node_map.push_back(id);
  }
  {
    auto ss = next_line();
    std::string tag;
    ss >> tag;
    if (tag != "DRNL") throw IoError("expected DRNL");
    int l = 0;
    while (ss >> l) sub.drnl.push_back(l);
  }
  if (static_cast<int>(sub.node_map.size()) != n ||
      static_cast<int>(sub.drnl.size()) != n) {
    throw DimensionError("subgraph dump sizes disagree with n=" + std::to_string(n));
  }
  sub.adj = Adjacency::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    auto ss = next_line();
    for (int j = 0; j < n; ++j) {
      if (!(ss >> sub.adj(i, j))) throw IoError("short adjacency row");
    }
  }
  if (!std::getline(is, line) || line != "END") throw IoError("expected END");
  return sub;
}

}  // namespace sgdiff

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


#ifndef SGDIFF_EXPERIMENTS_HPP
#define SGDIFF_EXPERIMENTS_HPP

// End-to-end pipelines: split -> extract -> train both diffusions -> fit the
// fusion -> score held-out pairs, and the three evaluation regimes built on
// top (cross-dataset transfer, limited training data, random flips).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgdiff/config.hpp"
#include "sgdiff/feature_diffusion.hpp"
#include "sgdiff/fusion.hpp"
#include "sgdiff/graph.hpp"
#include "sgdiff/metrics.hpp"
#include "sgdiff/structure_diffusion.hpp"
#include "sgdiff/subgraph.hpp"

namespace sgdiff {

using LogFn = std::function<void(const std::string&)>;

struct Dataset {
  std::string name;
  Graph graph;
};

/// Reads <root>/<name>/edges.txt and, when present, features.txt. The
/// directory lookup also tries the lower-cased name. Names of the form
/// surrogate:<kind>:<nodes>[:<seed>] build a synthetic graph instead.
Dataset load_dataset(const std::filesystem::path& root, const std::string& name);

/// Synthetic stand-ins used by tests and smoke runs:
///   "geometric": random geometric graph (high clustering, no features)
///   "latent":    the same construction with smooth noisy features of the
///                latent positions (homophilous features)
///   "blocks":    two-block stochastic block model with noisy block features
Graph make_surrogate(const std::string& kind, int num_nodes, std::uint64_t seed);

/// Trained components of one pipeline run.
struct PipelineModels {
  StructureModel structure;
  std::optional<FeatureModel> feature;
  FusionParams fusion;
  std::vector<double> structure_trace;
  std::vector<double> feature_trace;
  std::vector<double> fusion_trace;
};

/// Training material: the observed graph used for extraction plus the
/// labeled pairs available for training and for fitting the fusion.
struct TrainingPairs {
  std::vector<NodePair> pos;
  std::vector<NodePair> neg;
  std::vector<NodePair> fusion_pos;
  std::vector<NodePair> fusion_neg;
};

/// Observed graph for training and inference: the visible edges plus, when
/// features are used, features standardized with statistics from the nodes
/// touched by `stat_pairs`.
struct ObservedGraph {
  Graph graph;
  std::optional<FeatureStats> stats;
};

ObservedGraph make_observed(const Graph& full, std::vector<NodePair> visible_edges,
                            std::span<const NodePair> stat_pairs, bool use_features);

/// Picks up to max_train/2 training pairs per class from the available
/// positives and negatives, and the fusion pairs: unused (then reused)
/// available positives with fresh negatives from `full`, or the validation
/// pairs when fusion_split=valid.
TrainingPairs choose_training_pairs(const Graph& full, const EdgeSplit& split, std::vector<NodePair> available_pos,
                                    std::vector<NodePair> available_neg, const RunConfig& config,
                                    std::uint64_t seed);

/// Whether feature diffusion runs for this config and graph. Throws
/// StateError when features are forced on for a featureless graph.
bool features_enabled(const RunConfig& config, const Graph& g);

/// Trains structure diffusion, feature diffusion when `observed` carries
/// feature statistics, and the fusion.
PipelineModels train_models(const ObservedGraph& observed, const TrainingPairs& pairs, const RunConfig& config,
                            std::uint64_t seed, const LogFn& log = {});

/// Extracts and scores each pair on `g`. Extraction and noise seeds are keyed
/// by (seed, u, v), so a pair scores the same wherever it appears. Bundles
/// carry the pair labels as truth.
std::vector<LikelihoodBundle> score_pairs(const Graph& g, std::span<const LabeledPair> pairs,
                                          const PipelineModels& models, const RunConfig& config,
                                          std::uint64_t seed);

struct MetricSummary {
  double auc = 0;
  double ap = 0;
  double hits = 0;
};

MetricSummary evaluate_scores(const ScoredSet& s, int hits_k);
MetricSummary evaluate_bundles(std::span<const LikelihoodBundle> bundles, const FusionParams& p, int hits_k);

/// Logistic regression on common-neighbor and Adamic-Adar counts: the
/// harness's heuristic comparator.
struct HeuristicBaseline {
  Eigen::Vector3d w = Eigen::Vector3d::Zero();  // bias, cn, aa (standardized)
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Vector2d scale = Eigen::Vector2d::Ones();

  double score(const Graph& g, NodePair p) const;
};

Eigen::Vector2d heuristic_features(const Graph& g, NodePair p);
HeuristicBaseline fit_heuristic_baseline(const Graph& g, std::span<const NodePair> pos,
                                         std::span<const NodePair> neg);

struct MetricRecord {
  std::string experiment;
  std::string dataset;
  std::string seed;  // a seed value, or "mean" / "std"
  std::string metric;
  double value = 0;
};

struct ExperimentReport {
  std::string experiment;
  std::string dataset;
  std::string fingerprint;
  std::uint64_t seed = 0;
  double wall_seconds = 0;
  std::map<std::string, double> metrics;  // means, plus <name>_std
  std::vector<MetricRecord> records;

  /// "experiment dataset seed metric value", one per line.
  void write_records(std::ostream& os) const;
  void write_table(std::ostream& os) const;
};

struct ExperimentOptions {
  SplitFractions fractions{};
  LogFn log;
};

/// Everything run_standard and friends compute for one seed.
struct SeedRun {
  std::uint64_t seed = 0;
  EdgeSplit split;
  ObservedGraph observed;
  PipelineModels models;
  std::vector<LabeledPair> test_pairs;
  std::vector<LikelihoodBundle> test_bundles;
  MetricSummary metrics;
  TrainingPairs training;
};

/// Split, pair selection and model training for one seed; test pairs are
/// chosen but not scored.
SeedRun train_seed(const Dataset& data, const RunConfig& config, std::uint64_t seed, double train_fraction,
                   const ExperimentOptions& options = {});

/// One seed of the standard pipeline on a `train_fraction` subsample of the
/// training pairs (1.0 keeps all of them).
SeedRun run_seed(const Dataset& data, const RunConfig& config, std::uint64_t seed, double train_fraction,
                 const ExperimentOptions& options = {});

/// Seeds are derive_seed(config.seed, i) for i < config.seeds.
std::vector<std::uint64_t> experiment_seeds(const RunConfig& config);

ExperimentReport run_standard(const Dataset& data, const RunConfig& config, const ExperimentOptions& options = {});

/// Structure-only models trained on `source` score each target's test pairs
/// without any refitting. Throws ContractError if features are forced on.
std::vector<ExperimentReport> run_transfer(const Dataset& source, std::span<const Dataset> targets,
                                           const RunConfig& config, const ExperimentOptions& options = {});

/// Trains on `train_fraction` of the training pairs; also reports the
/// heuristic baseline under the same budget (baseline_auc, ...).
ExperimentReport run_limited(const Dataset& data, double train_fraction, const RunConfig& config,
                             const ExperimentOptions& options = {});

/// Models trained on the clean graph score test pairs re-extracted from a
/// randomly flipped observed graph, one report per budget.
std::vector<ExperimentReport> run_robustness(const Dataset& data, std::span<const double> budgets,
                                             const RunConfig& config, const ExperimentOptions& options = {});

}  // namespace sgdiff

#endif  // SGDIFF_EXPERIMENTS_HPP
